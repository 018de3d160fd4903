#include "micns/neural_symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "micns/errors.hpp"

namespace micns::nsym {

namespace {

std::string net_prefix(std::size_t j, const char* net) {
    return "ns.class" + std::to_string(j) + "." + net + ".";
}

void check_config(const IndicatorConfig& cfg) {
    if (cfg.n_classes == 0 || cfg.embed_dim == 0 || cfg.hidden_dim == 0)
        throw ValueError("indicator config needs positive n_classes, embed_dim, hidden_dim");
}

Tensor glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t({fan_in, fan_out});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-limit, limit);
    return t;
}

const Tensor& lookup(const ParamMap& params, const std::string& name,
                     std::vector<std::size_t> want) {
    auto it = params.find(name);
    if (it == params.end()) throw ValueError("missing parameter '" + name + "'");
    if (it->second.shape() != want)
        throw ShapeError("parameter '" + name + "' is " + it->second.shape_str() +
                         ", expected " + shape_to_string(want));
    return it->second;
}

struct NetNodes {
    ValueId w1, b1, w2, b2;
};

NetNodes make_net_params(Graph& g, const ParamMap& params, const std::string& prefix,
                         const IndicatorConfig& cfg) {
    return {g.param(prefix + "w1", lookup(params, prefix + "w1", {cfg.embed_dim, cfg.hidden_dim})),
            g.param(prefix + "b1", lookup(params, prefix + "b1", {1, cfg.hidden_dim})),
            g.param(prefix + "w2", lookup(params, prefix + "w2", {cfg.hidden_dim, 1})),
            g.param(prefix + "b2", lookup(params, prefix + "b2", {1, 1}))};
}

ValueId apply_net(Graph& g, const NetNodes& net, ValueId x) {
    ValueId hidden = g.relu(g.add(g.matmul(x, net.w1), net.b1));
    return g.sigmoid(g.add(g.matmul(hidden, net.w2), net.b2));
}

}  // namespace

RuleSemantics rule_semantics_from_string(const std::string& s) {
    if (s == "literal") return RuleSemantics::literal;
    if (s == "filtered") return RuleSemantics::filtered;
    if (s == "grounded") return RuleSemantics::grounded;
    throw ValueError("unknown rule semantics '" + s +
                     "' (expected literal, filtered or grounded)");
}

const char* rule_semantics_name(RuleSemantics s) {
    switch (s) {
        case RuleSemantics::literal: return "literal";
        case RuleSemantics::filtered: return "filtered";
        default: return "grounded";
    }
}

std::size_t indicator_param_count(const IndicatorConfig& cfg) {
    check_config(cfg);
    std::size_t per_net =
        cfg.embed_dim * cfg.hidden_dim + cfg.hidden_dim + cfg.hidden_dim + 1;
    return cfg.n_classes * 2 * per_net;
}

std::vector<std::string> indicator_param_names(const IndicatorConfig& cfg) {
    check_config(cfg);
    std::vector<std::string> names;
    for (std::size_t j = 0; j < cfg.n_classes; ++j)
        for (const char* net : {"pol", "rel"}) {
            auto p = net_prefix(j, net);
            names.push_back(p + "w1");
            names.push_back(p + "b1");
            names.push_back(p + "w2");
            names.push_back(p + "b2");
        }
    return names;
}

void init_indicator_params(ParamMap& params, const IndicatorConfig& cfg, Rng& rng) {
    check_config(cfg);
    for (std::size_t j = 0; j < cfg.n_classes; ++j)
        for (const char* net : {"pol", "rel"}) {
            auto p = net_prefix(j, net);
            params[p + "w1"] = glorot(cfg.embed_dim, cfg.hidden_dim, rng);
            params[p + "b1"] = Tensor({1, cfg.hidden_dim});
            params[p + "w2"] = glorot(cfg.hidden_dim, 1, rng);
            params[p + "b2"] = Tensor({1, 1});
        }
    // Relevance gates open at init (sigmoid(2) ~ 0.88): every concept starts
    // counted in its rule and training prunes, instead of a coin-flip start
    // where gates frozen shut never re-enter extracted rules.
    for (std::size_t j = 0; j < cfg.n_classes; ++j)
        params[net_prefix(j, "rel") + "b2"][0] = 2.0;
}

IndicatorNodes build_indicators(Graph& g, const std::vector<ValueId>& concept_embeddings,
                                const ParamMap& params, const IndicatorConfig& cfg) {
    check_config(cfg);
    if (concept_embeddings.empty())
        throw ValueError("build_indicators: need at least one concept embedding");
    for (ValueId e : concept_embeddings) {
        const auto& s = g.shape(e);
        if (s.size() != 2 || s[1] != cfg.embed_dim)
            throw ShapeError("build_indicators: concept embeddings must be Bx" +
                             std::to_string(cfg.embed_dim));
    }

    IndicatorNodes out;
    for (std::size_t j = 0; j < cfg.n_classes; ++j) {
        NetNodes pol = make_net_params(g, params, net_prefix(j, "pol"), cfg);
        NetNodes rel = make_net_params(g, params, net_prefix(j, "rel"), cfg);

        std::vector<ValueId> pcols, rcols;
        ValueId prow{}, rrow{};
        for (std::size_t i = 0; i < concept_embeddings.size(); ++i) {
            ValueId p = apply_net(g, pol, concept_embeddings[i]);
            ValueId r = apply_net(g, rel, concept_embeddings[i]);
            pcols.push_back(p);
            rcols.push_back(r);
            prow = i == 0 ? p : g.concat(prow, p);
            rrow = i == 0 ? r : g.concat(rrow, r);
        }
        out.polarity_cols.push_back(std::move(pcols));
        out.relevance_cols.push_back(std::move(rcols));
        out.polarity.push_back(prow);
        out.relevance.push_back(rrow);
    }
    return out;
}

ValueId build_rule_scores(Graph& g, const IndicatorNodes& ind, RuleSemantics s,
                          const std::vector<ValueId>& concept_probs) {
    if (ind.polarity_cols.empty()) throw ValueError("build_rule_scores: no classes");
    if (s == RuleSemantics::grounded &&
        concept_probs.size() != ind.polarity_cols.front().size())
        throw ValueError("build_rule_scores: grounded semantics needs one concept "
                         "probability column per concept");
    ValueId scores{};
    for (std::size_t j = 0; j < ind.polarity_cols.size(); ++j) {
        const auto& pcols = ind.polarity_cols[j];
        const auto& rcols = ind.relevance_cols[j];
        ValueId terms{};
        for (std::size_t i = 0; i < pcols.size(); ++i) {
            ValueId pair;
            if (s == RuleSemantics::literal) {
                pair = g.concat(g.neg_affine(pcols[i]), rcols[i]);
            } else if (s == RuleSemantics::filtered) {
                pair = g.concat(g.neg_affine(rcols[i]), pcols[i]);
            } else {
                // Polarity picks between the concept truth and its negation.
                ValueId lit = g.add(g.mul(pcols[i], concept_probs[i]),
                                    g.mul(g.neg_affine(pcols[i]),
                                          g.neg_affine(concept_probs[i])));
                pair = g.concat(g.neg_affine(rcols[i]), lit);
            }
            ValueId term = g.reduce_max(pair);
            terms = i == 0 ? term : g.concat(terms, term);
        }
        ValueId col = g.reduce_min(terms);
        scores = j == 0 ? col : g.concat(scores, col);
    }
    return scores;
}

IndicatorMatrix compute_indicators(const Tensor& embeddings, const ParamMap& params,
                                   const IndicatorConfig& cfg) {
    check_config(cfg);
    if (embeddings.rank() != 2 || embeddings.cols() != cfg.embed_dim)
        throw ShapeError("compute_indicators: embeddings must be Nx" +
                         std::to_string(cfg.embed_dim) + ", got " + embeddings.shape_str());
    std::size_t n = embeddings.rows(), c = cfg.n_classes;

    // The N concept rows ride through the networks like a batch, so values
    // match the training graph bit for bit.
    Graph g;
    ValueId x = g.input("embeddings", {n, cfg.embed_dim});
    g.bind("embeddings", embeddings);

    IndicatorMatrix out{Tensor({n, c}), Tensor({n, c})};
    for (std::size_t j = 0; j < c; ++j) {
        ValueId pol = apply_net(g, make_net_params(g, params, net_prefix(j, "pol"), cfg), x);
        ValueId rel = apply_net(g, make_net_params(g, params, net_prefix(j, "rel"), cfg), x);
        const Tensor& pv = g.forward(pol);
        for (std::size_t i = 0; i < n; ++i) out.polarity.at(i, j) = pv.at(i, 0);
        const Tensor& rv = g.forward(rel);
        for (std::size_t i = 0; i < n; ++i) out.relevance.at(i, j) = rv.at(i, 0);
    }
    return out;
}

std::vector<double> aggregate_eq1(const IndicatorMatrix& ind, RuleSemantics s,
                                  const std::vector<double>& concept_truths) {
    const Tensor& po = ind.polarity;
    const Tensor& re = ind.relevance;
    if (po.rank() != 2 || re.shape() != po.shape())
        throw ShapeError("aggregate_eq1: polarity " + po.shape_str() + " vs relevance " +
                         re.shape_str());
    if (po.rows() == 0) throw ValueError("aggregate_eq1: need at least one concept");
    if (s == RuleSemantics::grounded && concept_truths.size() != po.rows())
        throw ValueError("aggregate_eq1: grounded semantics needs one truth per concept");

    std::vector<double> scores(po.cols());
    for (std::size_t j = 0; j < po.cols(); ++j) {
        double best = 1.0;
        for (std::size_t i = 0; i < po.rows(); ++i) {
            double term;
            if (s == RuleSemantics::literal) {
                term = std::max(1.0 - po.at(i, j), re.at(i, j));
            } else if (s == RuleSemantics::filtered) {
                term = std::max(1.0 - re.at(i, j), po.at(i, j));
            } else {
                double c = concept_truths[i];
                double lit = po.at(i, j) * c + (1.0 - po.at(i, j)) * (1.0 - c);
                term = std::max(1.0 - re.at(i, j), lit);
            }
            best = std::min(best, term);
        }
        scores[j] = best;
    }
    return scores;
}

fuzzy::ConjunctiveRule extract_local_rule(const IndicatorMatrix& ind, std::size_t class_index,
                                          double tau) {
    if (class_index >= ind.polarity.cols())
        throw ValueError("extract_local_rule: class " + std::to_string(class_index) +
                         " out of range");
    fuzzy::ConjunctiveRule rule;
    rule.class_index = class_index;
    for (std::size_t i = 0; i < ind.polarity.rows(); ++i)
        if (fuzzy::booleanize(ind.relevance.at(i, class_index), tau))
            rule.literals.push_back(
                {i, fuzzy::booleanize(ind.polarity.at(i, class_index), tau)});
    return rule;
}

fuzzy::RuleSet aggregate_global_rules(const std::vector<SampleExplanation>& samples,
                                      std::size_t n_classes) {
    if (samples.empty()) throw ValueError("aggregate_global_rules: no samples");
    if (n_classes == 0) throw ValueError("aggregate_global_rules: no classes");

    using Body = std::vector<fuzzy::Literal>;
    std::vector<std::map<Body, std::size_t>> support(n_classes);
    std::vector<std::uint8_t> rule_bits, fuzzy_bits;

    for (const auto& s : samples) {
        if (s.predicted_class >= n_classes)
            throw ValueError("aggregate_global_rules: predicted class out of range");
        auto rule = s.rule.normalized();
        support[s.predicted_class][rule.literals] += 1;

        std::vector<double> truths(s.concept_bits.begin(), s.concept_bits.end());
        rule_bits.push_back(fuzzy::eval_rule(rule, truths) >= 0.5 ? 1 : 0);
        fuzzy_bits.push_back(fuzzy::booleanize(s.neural_score) ? 1 : 0);
    }

    fuzzy::RuleSet out;
    out.per_class.resize(n_classes);
    for (std::size_t j = 0; j < n_classes; ++j) {
        for (const auto& [body, count] : support[j]) {
            fuzzy::ConjunctiveRule r;
            r.class_index = j;
            r.literals = body;
            r.support = count;
            out.per_class[j].push_back(std::move(r));
        }
        std::stable_sort(out.per_class[j].begin(), out.per_class[j].end(),
                         [](const fuzzy::ConjunctiveRule& a, const fuzzy::ConjunctiveRule& b) {
                             return a.support != b.support ? a.support > b.support
                                                           : a.literals < b.literals;
                         });
    }
    out.fidelity = fuzzy::rule_error_rate(rule_bits, fuzzy_bits);
    return out;
}

}  // namespace micns::nsym

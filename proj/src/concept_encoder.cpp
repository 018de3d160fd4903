#include "micns/concept_encoder.hpp"

#include <cmath>

#include "micns/errors.hpp"

namespace micns::encoder {

namespace {

std::string concept_prefix(std::size_t i) { return "enc.c" + std::to_string(i) + "."; }

void check_config(const EncoderConfig& cfg) {
    if (cfg.n_concepts == 0 || cfg.feature_dim == 0 || cfg.embed_dim == 0)
        throw ValueError("encoder config needs positive n_concepts, feature_dim, embed_dim");
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

}  // namespace

std::size_t encoder_param_count(const EncoderConfig& cfg) {
    check_config(cfg);
    std::size_t per_branch = cfg.feature_dim * cfg.embed_dim + cfg.embed_dim;
    return cfg.n_concepts * 2 * per_branch + (2 * cfg.embed_dim + 1);
}

std::vector<std::string> encoder_param_names(const EncoderConfig& cfg) {
    check_config(cfg);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < cfg.n_concepts; ++i) {
        auto p = concept_prefix(i);
        names.push_back(p + "pos.w");
        names.push_back(p + "pos.b");
        names.push_back(p + "neg.w");
        names.push_back(p + "neg.b");
    }
    names.push_back("enc.score.w");
    names.push_back("enc.score.b");
    return names;
}

void init_encoder_params(ParamMap& params, const EncoderConfig& cfg, Rng& rng) {
    check_config(cfg);
    for (std::size_t i = 0; i < cfg.n_concepts; ++i) {
        auto p = concept_prefix(i);
        params[p + "pos.w"] = glorot(cfg.feature_dim, cfg.embed_dim, rng);
        params[p + "pos.b"] = Tensor({1, cfg.embed_dim});
        params[p + "neg.w"] = glorot(cfg.feature_dim, cfg.embed_dim, rng);
        params[p + "neg.b"] = Tensor({1, cfg.embed_dim});
    }
    params["enc.score.w"] = glorot(2 * cfg.embed_dim, 1, rng);
    params["enc.score.b"] = Tensor({1, 1});
}

EncoderNodes build_encoder(Graph& g, ValueId features, const ParamMap& params,
                           const EncoderConfig& cfg) {
    check_config(cfg);
    std::size_t f = cfg.feature_dim, m = cfg.embed_dim;
    if (g.shape(features).size() != 2 || g.shape(features)[1] != f)
        throw ShapeError("build_encoder: features must be BxF with F=" + std::to_string(f));

    ValueId score_w = g.param("enc.score.w", lookup(params, "enc.score.w", {2 * m, 1}));
    ValueId score_b = g.param("enc.score.b", lookup(params, "enc.score.b", {1, 1}));

    EncoderNodes out;
    for (std::size_t i = 0; i < cfg.n_concepts; ++i) {
        auto p = concept_prefix(i);
        ValueId e_pos = g.relu(
            g.add(g.matmul(features, g.param(p + "pos.w", lookup(params, p + "pos.w", {f, m}))),
                  g.param(p + "pos.b", lookup(params, p + "pos.b", {1, m}))));
        ValueId e_neg = g.relu(
            g.add(g.matmul(features, g.param(p + "neg.w", lookup(params, p + "neg.w", {f, m}))),
                  g.param(p + "neg.b", lookup(params, p + "neg.b", {1, m}))));

        ValueId prob = g.sigmoid(g.add(g.matmul(g.concat(e_pos, e_neg), score_w), score_b));
        ValueId mixed = g.add(g.mul(prob, e_pos), g.mul(g.neg_affine(prob), e_neg));

        out.per_concept_prob.push_back(prob);
        out.per_concept_mix.push_back(mixed);
        out.concept_probs = i == 0 ? prob : g.concat(out.concept_probs, prob);
        out.concept_features = i == 0 ? mixed : g.concat(out.concept_features, mixed);
    }
    return out;
}

}  // namespace micns::encoder

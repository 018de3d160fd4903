#include "micns/stability.hpp"

#include <cmath>

#include "micns/errors.hpp"
#include "micns/neural_symbolic.hpp"
#include "micns/rng.hpp"

namespace micns::stability {

namespace {

std::vector<fuzzy::ConjunctiveRule> all_class_rules(const nsym::IndicatorMatrix& ind,
                                                    std::size_t n_classes) {
    std::vector<fuzzy::ConjunctiveRule> rules;
    rules.reserve(n_classes);
    for (std::size_t j = 0; j < n_classes; ++j)
        rules.push_back(nsym::extract_local_rule(ind, j));
    return rules;
}

bool rules_differ(const std::vector<fuzzy::ConjunctiveRule>& a,
                  const std::vector<fuzzy::ConjunctiveRule>& b) {
    for (std::size_t j = 0; j < a.size(); ++j)
        if (!a[j].same_body(b[j])) return true;
    return false;
}

}  // namespace

StabilityReport perturb_stability(const data::Dataset& dataset, const ParamMap& params,
                                  const model::ModelConfig& cfg,
                                  const PerturbationConfig& pcfg) {
    if (pcfg.draws == 0) throw ValueError("perturb_stability: need at least one draw");
    if (!(pcfg.epsilon >= 0.0)) throw ValueError("perturb_stability: epsilon must be >= 0");
    std::size_t m = dataset.size();
    if (m == 0) throw ValueError("perturb_stability: empty dataset");

    model::ForwardResult base = model::forward_full(dataset.features, params, cfg);
    std::vector<std::size_t> base_pred = model::argmax_rows(base.logits);
    std::vector<std::vector<fuzzy::ConjunctiveRule>> base_rules;
    base_rules.reserve(m);
    for (std::size_t b = 0; b < m; ++b)
        base_rules.push_back(all_class_rules(base.indicators[b], cfg.n_classes));

    Rng rng(pcfg.seed);
    std::size_t flips = 0, rule_changes = 0;
    double max_change = 0.0;

    for (std::size_t b = 0; b < m; ++b) {
        bool flipped = false, changed = false;
        for (std::size_t k = 0; k < pcfg.draws; ++k) {
            Tensor x({1, cfg.feature_dim});
            for (std::size_t c = 0; c < cfg.feature_dim; ++c)
                x.at(0, c) = dataset.features.at(b, c) + pcfg.epsilon * rng.uniform(-1.0, 1.0);

            model::ForwardResult fr = model::forward_full(x, params, cfg);
            if (model::argmax_rows(fr.logits)[0] != base_pred[b]) flipped = true;

            const nsym::IndicatorMatrix& pi = fr.indicators[0];
            const nsym::IndicatorMatrix& bi = base.indicators[b];
            for (std::size_t i = 0; i < pi.polarity.size(); ++i) {
                max_change = std::max(max_change, std::fabs(pi.polarity[i] - bi.polarity[i]));
                max_change =
                    std::max(max_change, std::fabs(pi.relevance[i] - bi.relevance[i]));
            }
            if (rules_differ(all_class_rules(pi, cfg.n_classes), base_rules[b]))
                changed = true;
        }
        if (flipped) ++flips;
        if (changed) ++rule_changes;
    }

    StabilityReport report;
    report.epsilon = pcfg.epsilon;
    report.draws = pcfg.draws;
    report.samples = m;
    report.class_flip_fraction = static_cast<double>(flips) / static_cast<double>(m);
    report.max_indicator_change = max_change;
    report.rule_change_fraction = static_cast<double>(rule_changes) / static_cast<double>(m);
    return report;
}

nlohmann::json stability_to_json(const StabilityReport& report) {
    return {{"epsilon", report.epsilon},
            {"draws", report.draws},
            {"samples", report.samples},
            {"class_flip_fraction", report.class_flip_fraction},
            {"max_indicator_change", report.max_indicator_change},
            {"rule_change_fraction", report.rule_change_fraction}};
}

}  // namespace micns::stability

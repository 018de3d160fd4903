#include "micns/fuzzy.hpp"

#include <algorithm>
#include <cmath>

#include "micns/errors.hpp"

namespace micns::fuzzy {

Semantics semantics_from_string(const std::string& s) {
    if (s == "godel") return Semantics::godel;
    if (s == "product") return Semantics::product;
    throw ValueError("unknown fuzzy semantics '" + s + "' (expected godel or product)");
}

const char* semantics_name(Semantics s) {
    return s == Semantics::godel ? "godel" : "product";
}

double check_truth(double v, const char* context) {
    if (!(v >= 0.0 && v <= 1.0))
        throw ValueError(std::string(context) + ": truth degree " + std::to_string(v) +
                         " outside [0, 1]");
    return v;
}

TruthValue::TruthValue(double v) : v_(check_truth(v, "TruthValue")) {}

double fuzzy_neg(double a) { return 1.0 - check_truth(a, "fuzzy_neg"); }

double fuzzy_and(double a, double b, Semantics s) {
    check_truth(a, "fuzzy_and");
    check_truth(b, "fuzzy_and");
    return s == Semantics::godel ? std::min(a, b) : a * b;
}

double fuzzy_or(double a, double b, Semantics s) {
    check_truth(a, "fuzzy_or");
    check_truth(b, "fuzzy_or");
    return s == Semantics::godel ? std::max(a, b) : a + b - a * b;
}

bool booleanize(double v, double threshold) {
    check_truth(v, "booleanize");
    return v >= threshold;
}

ConjunctiveRule ConjunctiveRule::normalized() const {
    ConjunctiveRule out = *this;
    std::sort(out.literals.begin(), out.literals.end());
    for (std::size_t i = 1; i < out.literals.size(); ++i)
        if (out.literals[i].concept_index == out.literals[i - 1].concept_index)
            throw ValueError("rule for class " + std::to_string(class_index) +
                             " mentions concept " +
                             std::to_string(out.literals[i].concept_index) + " twice");
    return out;
}

bool ConjunctiveRule::same_body(const ConjunctiveRule& o) const {
    return normalized().literals == o.normalized().literals;
}

double eval_rule(const ConjunctiveRule& rule, const std::vector<double>& truths, Semantics s) {
    double acc = 1.0;
    for (const Literal& lit : rule.literals) {
        if (lit.concept_index >= truths.size())
            throw ValueError("rule literal references concept " +
                             std::to_string(lit.concept_index) + " but only " +
                             std::to_string(truths.size()) + " truths were given");
        double v = check_truth(truths[lit.concept_index], "eval_rule");
        if (!lit.positive) v = 1.0 - v;
        acc = fuzzy_and(acc, v, s);
    }
    return acc;
}

ErrorRate rule_error_rate(const std::vector<std::uint8_t>& a,
                          const std::vector<std::uint8_t>& b) {
    if (a.size() != b.size())
        throw ValueError("rule_error_rate: prediction vectors have lengths " +
                         std::to_string(a.size()) + " and " + std::to_string(b.size()));
    if (a.empty()) throw ValueError("rule_error_rate: empty prediction vectors");

    ErrorRate out;
    out.n = a.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] != b[i]) ? 1.0 : 0.0;
    out.mean = sum / static_cast<double>(out.n);

    if (out.n >= 2) {
        double ss = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            double d = ((a[i] != b[i]) ? 1.0 : 0.0) - out.mean;
            ss += d * d;
        }
        double sd = std::sqrt(ss / static_cast<double>(out.n - 1));
        out.se = sd / std::sqrt(static_cast<double>(out.n));
    }
    return out;
}

const ConjunctiveRule& RuleSet::top_rule(std::size_t class_index) const {
    if (class_index >= per_class.size() || per_class[class_index].empty())
        throw ValueError("no rules recorded for class " + std::to_string(class_index));
    return per_class[class_index].front();
}

std::string format_rule(const ConjunctiveRule& rule,
                        const std::vector<std::string>& concept_names) {
    auto name_of = [&](std::size_t i) {
        if (i < concept_names.size() && !concept_names[i].empty()) return concept_names[i];
        return "c_" + std::to_string(i);
    };

    std::string out = "y_" + std::to_string(rule.class_index) + " ⇐ ";
    ConjunctiveRule norm = rule.normalized();
    if (norm.literals.empty()) return out + "⊤";
    for (std::size_t i = 0; i < norm.literals.size(); ++i) {
        if (i) out += " ∧ ";
        if (!norm.literals[i].positive) out += "¬";
        out += name_of(norm.literals[i].concept_index);
    }
    return out;
}

nlohmann::json rule_set_to_json(const RuleSet& rules,
                                const std::vector<std::string>& concept_names) {
    nlohmann::json classes = nlohmann::json::array();
    for (std::size_t j = 0; j < rules.per_class.size(); ++j) {
        nlohmann::json entries = nlohmann::json::array();
        for (const ConjunctiveRule& r : rules.per_class[j]) {
            nlohmann::json lits = nlohmann::json::array();
            for (const Literal& lit : r.normalized().literals) {
                nlohmann::json e{{"concept", lit.concept_index}, {"positive", lit.positive}};
                if (lit.concept_index < concept_names.size())
                    e["name"] = concept_names[lit.concept_index];
                lits.push_back(e);
            }
            entries.push_back({{"text", format_rule(r, concept_names)},
                               {"literals", lits},
                               {"support", r.support}});
        }
        classes.push_back({{"class", j}, {"rules", entries}});
    }
    return {{"classes", classes},
            {"error_rate",
             {{"mean", rules.fidelity.mean}, {"se", rules.fidelity.se}, {"n", rules.fidelity.n}}}};
}

}  // namespace micns::fuzzy

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace micns::fuzzy {

/// Triangular-norm family used for conjunction/disjunction. Godel (min/max)
/// is the default; product is available for comparison experiments.
enum class Semantics { godel, product };

Semantics semantics_from_string(const std::string& s);
const char* semantics_name(Semantics s);

/// Degree of truth in [0, 1]; construction validates the range.
class TruthValue {
public:
    explicit TruthValue(double v);
    double value() const { return v_; }

private:
    double v_;
};

/// Checks a raw degree is in [0, 1] and returns it.
double check_truth(double v, const char* context);

double fuzzy_neg(double a);
double fuzzy_and(double a, double b, Semantics s = Semantics::godel);
double fuzzy_or(double a, double b, Semantics s = Semantics::godel);

/// Crisp cast at a threshold; the boundary itself maps to true.
bool booleanize(double v, double threshold = 0.5);

/// One conjunct: concept index plus polarity (false means negated).
struct Literal {
    std::size_t concept_index = 0;
    bool positive = true;

    bool operator==(const Literal&) const = default;
    bool operator<(const Literal& o) const {
        return concept_index != o.concept_index ? concept_index < o.concept_index
                                                : positive < o.positive;
    }
};

/// Conjunction of literals predicting one class. An empty body is vacuously
/// true. Support counts how many samples produced this exact rule.
struct ConjunctiveRule {
    std::size_t class_index = 0;
    std::vector<Literal> literals;
    std::size_t support = 0;

    /// Literals sorted by concept index; duplicate concepts are rejected.
    ConjunctiveRule normalized() const;
    bool same_body(const ConjunctiveRule& o) const;
};

/// Truth degree of a rule body on concept truths:
/// conjunction over literals of (value | neg value). Empty body gives 1.
double eval_rule(const ConjunctiveRule& rule, const std::vector<double>& truths,
                 Semantics s = Semantics::godel);

/// Disagreement frequency between two Boolean prediction vectors, with its
/// standard error (sample standard deviation over sqrt(n); 0 when n < 2).
struct ErrorRate {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

ErrorRate rule_error_rate(const std::vector<std::uint8_t>& a,
                          const std::vector<std::uint8_t>& b);

/// Rules grouped per class, ordered by descending support, with the
/// Booleanization fidelity of the rule layer attached.
struct RuleSet {
    std::vector<std::vector<ConjunctiveRule>> per_class;
    ErrorRate fidelity;

    /// Highest-support rule of a class; throws if the class has none.
    const ConjunctiveRule& top_rule(std::size_t class_index) const;
};

/// Renders "y_j <= lit ^ lit" with UTF-8 connectives, e.g.
/// "y_1 ⇐ c_0 ∧ ¬c_1". Concept names substitute for c_i when provided.
/// An empty body renders as "y_j ⇐ ⊤".
std::string format_rule(const ConjunctiveRule& rule,
                        const std::vector<std::string>& concept_names = {});

nlohmann::json rule_set_to_json(const RuleSet& rules,
                                const std::vector<std::string>& concept_names = {});

}  // namespace micns::fuzzy

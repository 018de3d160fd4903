#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "micns/adam.hpp"
#include "micns/fuzzy.hpp"
#include "micns/graph.hpp"
#include "micns/rng.hpp"
#include "micns/tensor.hpp"

namespace micns::nsym {

/// Shapes of the per-class polarity and relevance networks. Each is an MLP
/// embed_dim -> hidden_dim (relu) -> 1 (sigmoid), applied to one concept
/// embedding at a time.
struct IndicatorConfig {
    std::size_t n_classes = 0;
    std::size_t embed_dim = 16;
    std::size_t hidden_dim = 32;
};

/// How indicator pairs reduce to a class truth degree:
///   literal   y_j = min_i max(1 - polarity[i,j], relevance[i,j])
///   filtered  y_j = min_i max(1 - relevance[i,j], polarity[i,j])
///   grounded  y_j = min_i max(1 - relevance[i,j],
///                             polarity[i,j] * c_i + (1 - polarity[i,j]) * (1 - c_i))
/// literal is the default everywhere. grounded additionally consults the
/// concept truth degree c_i, so relevance gates a term out and polarity picks
/// between c_i and its negation; it is the only variant whose optima make
/// extract_local_rule's static reading of the indicators self-consistent.
enum class RuleSemantics { literal, filtered, grounded };

RuleSemantics rule_semantics_from_string(const std::string& s);
const char* rule_semantics_name(RuleSemantics s);

std::size_t indicator_param_count(const IndicatorConfig& cfg);
std::vector<std::string> indicator_param_names(const IndicatorConfig& cfg);
void init_indicator_params(ParamMap& params, const IndicatorConfig& cfg, Rng& rng);

struct IndicatorNodes {
    std::vector<std::vector<ValueId>> polarity_cols;   // [class][concept], B x 1
    std::vector<std::vector<ValueId>> relevance_cols;  // [class][concept], B x 1
    std::vector<ValueId> polarity;                     // [class], B x N
    std::vector<ValueId> relevance;                    // [class], B x N
};

/// Appends both indicator networks for every class on top of the N per-concept
/// embedding nodes (each B x embed_dim).
IndicatorNodes build_indicators(Graph& g, const std::vector<ValueId>& concept_embeddings,
                                const ParamMap& params, const IndicatorConfig& cfg);

/// Appends the min/max reduction, yielding B x n_classes truth degrees.
/// grounded semantics needs the N per-concept probability columns (B x 1);
/// the other variants ignore them.
ValueId build_rule_scores(Graph& g, const IndicatorNodes& ind,
                          RuleSemantics s = RuleSemantics::literal,
                          const std::vector<ValueId>& concept_probs = {});

/// Indicator values for one sample's N concept embeddings, as N x C matrices.
struct IndicatorMatrix {
    Tensor polarity;
    Tensor relevance;
};

/// Pure evaluation on a parameter snapshot (same arithmetic as the graph path).
IndicatorMatrix compute_indicators(const Tensor& embeddings, const ParamMap& params,
                                   const IndicatorConfig& cfg);

/// The min/max reduction on plain matrices; one truth degree per class.
/// grounded semantics needs the N concept truth degrees.
std::vector<double> aggregate_eq1(const IndicatorMatrix& ind,
                                  RuleSemantics s = RuleSemantics::literal,
                                  const std::vector<double>& concept_truths = {});

/// Reads one class's rule out of the indicators: a concept joins the body iff
/// its relevance reaches tau, with positive sign iff its polarity does.
fuzzy::ConjunctiveRule extract_local_rule(const IndicatorMatrix& ind, std::size_t class_index,
                                          double tau = 0.5);

/// Everything rule aggregation needs from one evaluated sample.
struct SampleExplanation {
    std::size_t predicted_class = 0;           // argmax of the neural truth degrees
    fuzzy::ConjunctiveRule rule;               // local rule at that class
    std::vector<std::uint8_t> concept_bits;    // booleanized concept probabilities
    double neural_score = 0.0;                 // truth degree at the predicted class
};

/// Groups identical rule bodies per predicted class, counts support, orders by
/// support (ties by body), and attaches the Boolean-vs-fuzzy disagreement
/// rate: per sample, the rule evaluated classically on concept_bits against
/// booleanize(neural_score).
fuzzy::RuleSet aggregate_global_rules(const std::vector<SampleExplanation>& samples,
                                      std::size_t n_classes);

}  // namespace micns::nsym

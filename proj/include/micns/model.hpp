#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "micns/adam.hpp"
#include "micns/concept_encoder.hpp"
#include "micns/dataset.hpp"
#include "micns/fuzzy.hpp"
#include "micns/graph.hpp"
#include "micns/metrics.hpp"
#include "micns/neural_symbolic.hpp"
#include "micns/rng.hpp"

namespace micns::model {

/// Architecture of the full pipeline: concept encoder, per-class indicator
/// networks with the min/max rule layer, and an affine fusion head over
/// [raw features ; concept features].
struct ModelConfig {
    std::size_t n_classes = 0;
    std::size_t n_concepts = 0;
    std::size_t feature_dim = 0;
    std::size_t embed_dim = 16;
    std::size_t hidden_dim = 32;
    nsym::RuleSemantics semantics = nsym::RuleSemantics::literal;

    encoder::EncoderConfig encoder_config() const {
        return {n_concepts, feature_dim, embed_dim};
    }
    nsym::IndicatorConfig indicator_config() const {
        return {n_classes, embed_dim, hidden_dim};
    }
};

struct Hyperparams {
    double lambda1 = 0.1;        // concept-loss weight
    double lambda2 = 0.1;        // rule-layer loss weight
    double learning_rate = 5e-5;
    std::size_t epochs = 100;
    /// Leading epochs stepped on the concept loss alone (unscaled), aligning
    /// concept scores with their labels before the joint objective takes over.
    /// 0 keeps every epoch joint. Counts toward `epochs`, never past it.
    std::size_t concept_epochs = 0;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
};

std::size_t model_param_count(const ModelConfig& cfg);
std::vector<std::string> model_param_names(const ModelConfig& cfg);
void init_model_params(ParamMap& params, const ModelConfig& cfg, Rng& rng);

struct ForwardNodes {
    ValueId features;              // input, B x F
    encoder::EncoderNodes enc;
    nsym::IndicatorNodes ind;
    ValueId neural_scores;         // B x C truth degrees
    ValueId logits;                // B x C fusion-head outputs
};

/// Appends the whole model to `g`, declaring a "features" input of shape
/// batch x feature_dim. Bind that input before evaluating.
ForwardNodes build_forward(Graph& g, std::size_t batch, const ParamMap& params,
                           const ModelConfig& cfg);

struct LossNodes {
    ValueId task;     // softmax cross-entropy of the fusion head
    ValueId concepts; // binary cross-entropy of concept probabilities
    ValueId neural;   // rule-layer loss (see build_loss)
    ValueId total;    // task + (lambda1 * concepts + lambda2 * neural)
};

/// Loss graph on top of a forward pass. The rule-layer loss is BCE against
/// one-hot labels for two classes; with more classes the truth degrees are
/// renormalized to a distribution (1e-7 floor) and fed to cross-entropy.
/// concept_labels must be batch x n_concepts bits.
LossNodes build_loss(Graph& g, const ForwardNodes& fwd,
                     const std::vector<std::size_t>& labels, const Tensor& concept_labels,
                     double lambda1, double lambda2);

/// Forward pass of a feature matrix on a parameter snapshot.
struct ForwardResult {
    Tensor logits;            // M x C
    Tensor neural_scores;     // M x C
    Tensor concept_probs;     // M x N
    Tensor concept_features;  // M x (N * embed_dim)
    std::vector<nsym::IndicatorMatrix> indicators;  // one N x C pair per sample
};

ForwardResult forward_full(const Tensor& features, const ParamMap& params,
                           const ModelConfig& cfg);

struct LossBreakdown {
    double task_loss = 0.0;
    double concept_loss = 0.0;
    double neural_loss = 0.0;
    double total = 0.0;
};

/// Loss of one batch on a parameter snapshot, without updating anything.
LossBreakdown total_loss(const Tensor& features, const std::vector<std::size_t>& labels,
                         const Tensor& concept_labels, const ParamMap& params,
                         const ModelConfig& cfg, double lambda1, double lambda2);

struct EpochStats {
    std::size_t epoch = 0;  // 1-based
    LossBreakdown losses;   // sample-weighted means; total recombined from parts
};

struct TrainResult {
    ModelConfig config;
    Hyperparams hyper;
    ParamMap params;
    AdamState adam;
    std::vector<EpochStats> curve;
};

/// Full training loop: seeded init, per-epoch reshuffle, Adam updates. All
/// randomness comes from one generator seeded with hyper.seed, so equal seeds
/// give bit-identical runs. A non-finite loss aborts with the epoch/batch in
/// the message.
TrainResult train(const data::Dataset& dataset, const ModelConfig& cfg,
                  const Hyperparams& hyper);

/// Columns: epoch,task_loss,concept_loss,neural_loss,total_loss.
void write_loss_curve_csv(const std::filesystem::path& path,
                          const std::vector<EpochStats>& curve);
std::vector<EpochStats> read_loss_curve_csv(const std::filesystem::path& path);

struct Evaluation {
    metrics::MulticlassReport fused;
    metrics::MulticlassReport neural;
    fuzzy::RuleSet rules;
    std::vector<std::size_t> fused_predictions;
    std::vector<std::size_t> neural_predictions;
    std::vector<nsym::SampleExplanation> explanations;
    ForwardResult outputs;
};

/// Metrics for both heads, plus rule extraction and aggregation. Pure in the
/// parameter snapshot: equal inputs give bit-identical bundles.
Evaluation evaluate(const data::Dataset& dataset, const ParamMap& params,
                    const ModelConfig& cfg);

struct Checkpoint {
    ModelConfig config;
    Hyperparams hyper;
    ParamMap params;
    AdamState adam;
    std::size_t epochs_completed = 0;
};

/// Writes checkpoint.json plus one tensor file per parameter and per Adam
/// moment under `dir`. Re-saving a loaded checkpoint is byte-identical.
void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

/// Row-wise argmax with ties resolved to the lowest index.
std::vector<std::size_t> argmax_rows(const Tensor& m);

/// Numerically stable row-wise softmax.
Tensor softmax_rows(const Tensor& logits);

/// Tensor rows as nested vectors (the score format the metrics take).
std::vector<std::vector<double>> tensor_rows(const Tensor& m);

}  // namespace micns::model

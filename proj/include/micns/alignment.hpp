#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "micns/tensor.hpp"

namespace micns::alignment {

/// A pool of named concepts with optional text embeddings (N x D) and the
/// class-name embeddings (K x D) used by the class-similarity filter.
/// Embedding tensors may be empty when only names are known (synthetic data).
struct ConceptSet {
    std::vector<std::string> names;
    Tensor embeddings;
    std::vector<std::string> class_names;
    Tensor class_embeddings;

    std::size_t size() const { return names.size(); }
    bool has_embeddings() const { return !embeddings.empty(); }
};

ConceptSet load_concept_set(const std::filesystem::path& json_path);
void save_concept_set(const std::filesystem::path& json_path, const ConceptSet& set);

/// Cosine similarity; either vector having zero norm yields 0.
double cosine(const double* a, const double* b, std::size_t n);

/// Cosine of one text embedding against every spatial position of an
/// H x W x D feature map, giving an H x W response map.
Tensor compute_heatmap(const Tensor& feature_map, const Tensor& text_embedding);

/// Average-pools a response map to a single concept score.
double pool_scores(const Tensor& heatmap);

/// Pooled score of every concept on every sample: M x N from M feature maps
/// and N x D concept embeddings.
Tensor concept_scores(const std::vector<Tensor>& feature_maps, const Tensor& embeddings);

/// Binary pseudo-labels: score >= tau maps to 1.
Tensor threshold_labels(const Tensor& scores, double tau = 0.65);

/// Column indices whose best score over samples reaches the floor
/// (max >= floor keeps; a 0.44 max is pruned at the default 0.45 floor).
std::vector<std::size_t> prune_low_similarity(const Tensor& scores, double floor = 0.45);

struct FilterConfig {
    bool length_filter = true;
    std::size_t max_name_length = 30;  // names strictly longer are dropped
    bool class_similarity_filter = true;
    double class_similarity_threshold = 0.85;  // cosine >= drops
    bool pairwise_filter = true;
    double pairwise_threshold = 0.9;  // cosine >= drops the later concept
    bool projection_filter = true;
    double projection_floor = 0.45;  // max score >= keeps
};

/// Per-concept audit entry: which stage removed it, or kept with stage "".
struct FilterDecision {
    std::size_t index = 0;
    std::string name;
    bool kept = true;
    std::string stage;     // "length", "class-similarity", "pairwise", "projection"
    double trigger = 0.0;  // the similarity/score that caused the drop
};

struct FilterResult {
    ConceptSet retained;
    std::vector<std::size_t> retained_indices;  // into the input pool
    std::vector<FilterDecision> decisions;      // one per input concept
};

/// Applies the enabled filters in the fixed order length -> class-similarity
/// -> pairwise -> projection. `scores` (M x input-pool-N) feeds the
/// projection stage and may be empty only when that stage is disabled.
FilterResult filter_concepts(const ConceptSet& pool, const Tensor& scores,
                             const FilterConfig& config);

nlohmann::json filter_provenance_json(const FilterResult& result, const FilterConfig& config);

}  // namespace micns::alignment

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "micns/fuzzy.hpp"
#include "micns/tensor.hpp"

namespace micns::data {

struct SampleEntry {
    std::string id;
    std::string features;     // path relative to the manifest
    std::string feature_map;  // optional rank-3 map, relative path or empty
    std::size_t label = 0;
};

/// On-disk dataset description. Tensor payloads stay in separate files; the
/// manifest only carries ids, labels, relative paths and dimensions.
struct DatasetManifest {
    std::size_t feature_dim = 0;
    std::size_t n_classes = 0;
    std::string concept_labels_csv;  // optional relative path
    std::string concept_set;         // optional relative path
    std::vector<SampleEntry> samples;
    std::filesystem::path base_dir;  // where relative paths resolve; not serialized
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Fully loaded dataset. `concept_labels` is empty when the manifest lists no
/// CSV; `feature_maps` is filled only on request.
struct Dataset {
    Tensor features;  // M x F
    std::vector<std::size_t> labels;
    std::vector<std::string> ids;
    Tensor concept_labels;  // M x N or empty
    std::vector<std::string> concept_names;
    std::size_t n_classes = 0;
    std::vector<Tensor> feature_maps;

    std::size_t size() const { return labels.size(); }
};

/// Reads every referenced file, checking existence, tensor shapes against
/// feature_dim, label ranges, and that CSV sample ids match manifest order.
Dataset load_dataset(const DatasetManifest& manifest, bool with_feature_maps = false);

/// Concept pseudo-label table: header "id,<name>,..." and strict 0/1 cells.
struct ConceptCsv {
    std::vector<std::string> ids;
    std::vector<std::string> names;
    Tensor bits;  // M x N
};

void write_concept_csv(const std::filesystem::path& path, const ConceptCsv& csv);
ConceptCsv read_concept_csv(const std::filesystem::path& path);

/// Planted-rule dataset recipe. Concept bit vectors are drawn uniformly from
/// the assignments satisfying each class's rule and no other class's rule;
/// features are a fixed seeded affine image of the bits plus Gaussian noise.
struct SyntheticSpec {
    std::size_t n_concepts = 4;
    std::size_t n_classes = 2;
    std::size_t samples_per_class = 200;
    std::size_t feature_dim = 16;
    double noise_sigma = 0.05;
    std::uint64_t seed = 1;
    /// One rule per class; empty selects the built-in two-class pair
    /// y_0 <= !c_0 ^ c_1 ^ !c_2 ^ c_3 and y_1 <= c_0 ^ !c_1 ^ c_2 ^ !c_3.
    /// The bodies cover every concept with complementary signs, so each
    /// concept's role is constant within a class and agrees across the
    /// class boundary - the regime where extracted rules can match exactly.
    std::vector<fuzzy::ConjunctiveRule> rules;
};

std::vector<fuzzy::ConjunctiveRule> default_planted_rules();

/// Per-class satisfying assignments that no other class's rule also satisfies.
/// Throws if a rule is malformed, duplicated per class, out of range, or has
/// no exclusive satisfying assignment.
std::vector<std::vector<std::uint32_t>> planted_pools(
    const std::vector<fuzzy::ConjunctiveRule>& rules, std::size_t n_concepts,
    std::size_t n_classes);

/// Validation-only wrapper over planted_pools.
void validate_planted_rules(const std::vector<fuzzy::ConjunctiveRule>& rules,
                            std::size_t n_concepts, std::size_t n_classes);

struct SyntheticResult {
    DatasetManifest manifest;
    Dataset dataset;
    std::vector<fuzzy::ConjunctiveRule> rules;
};

/// Generates the dataset and writes manifest, per-sample feature tensors,
/// concept CSV, a names-only concept set, and the planted rules to out_dir.
SyntheticResult gen_synthetic(const SyntheticSpec& spec,
                              const std::filesystem::path& out_dir);

}  // namespace micns::data

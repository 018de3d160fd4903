#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace micns::metrics {

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t tn = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + tn + fp + fn; }
};

/// Tallies binary predictions against ground truth. Vectors must be equal
/// length, non-empty, and strictly 0/1.
ConfusionCounts confusion_counts(const std::vector<std::uint8_t>& predicted,
                                 const std::vector<std::uint8_t>& actual);

/// Threshold metrics with undefined ratios (0/0) kept first-class rather than
/// collapsing to NaN. AUC is populated by callers that have scores.
struct BinaryMetrics {
    double accuracy = 0.0;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    std::optional<double> auc;
};

BinaryMetrics classification_metrics(const ConfusionCounts& c);

/// Area under the ROC curve by the rank-based Mann-Whitney statistic:
/// (concordant + 0.5 * tied) / (pos * neg), computed via average ranks.
/// Throws if labels are all the same class.
double auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

/// One-vs-rest report over C classes. `accuracy` is overall top-1 agreement;
/// macro entries average the per-class values, skipping undefined ones.
struct MulticlassReport {
    std::size_t n_classes = 0;
    double accuracy = 0.0;
    std::vector<BinaryMetrics> per_class;
    BinaryMetrics macro;
};

/// `scores`, when non-empty, holds one row per sample with C per-class scores
/// and feeds per-class AUC; classes missing either polarity keep AUC unset.
MulticlassReport multiclass_metrics(const std::vector<std::size_t>& predicted,
                                    const std::vector<std::size_t>& actual,
                                    std::size_t n_classes,
                                    const std::vector<std::vector<double>>& scores = {});

/// Two-class reports reduce to binary metrics on the positive class (index 1).
BinaryMetrics binary_summary(const MulticlassReport& report);

nlohmann::json metrics_to_json(const BinaryMetrics& m);
nlohmann::json report_to_json(const MulticlassReport& r);

struct LabeledMetrics {
    std::string head;
    BinaryMetrics m;
};

/// Fixed columns "head,accuracy,precision,recall,f1,auc"; undefined values
/// serialize as empty cells.
std::string metrics_csv(const std::vector<LabeledMetrics>& rows);

}  // namespace micns::metrics

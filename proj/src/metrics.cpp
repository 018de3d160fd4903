#include "micns/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "micns/errors.hpp"

namespace micns::metrics {

ConfusionCounts confusion_counts(const std::vector<std::uint8_t>& predicted,
                                 const std::vector<std::uint8_t>& actual) {
    if (predicted.size() != actual.size())
        throw ValueError("confusion_counts: " + std::to_string(predicted.size()) +
                         " predictions vs " + std::to_string(actual.size()) + " labels");
    if (predicted.empty()) throw ValueError("confusion_counts: empty input");

    ConfusionCounts c;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i] > 1 || actual[i] > 1)
            throw ValueError("confusion_counts: entries must be 0 or 1");
        if (predicted[i] && actual[i]) ++c.tp;
        else if (predicted[i] && !actual[i]) ++c.fp;
        else if (!predicted[i] && actual[i]) ++c.fn;
        else ++c.tn;
    }
    return c;
}

BinaryMetrics classification_metrics(const ConfusionCounts& c) {
    if (c.total() == 0) throw ValueError("classification_metrics: empty confusion counts");

    BinaryMetrics m;
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    if (c.tp + c.fp > 0)
        m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn > 0)
        m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (m.precision && m.recall && *m.precision + *m.recall > 0.0)
        m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
    return m;
}

double auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
    if (scores.size() != labels.size())
        throw ValueError("auc: " + std::to_string(scores.size()) + " scores vs " +
                         std::to_string(labels.size()) + " labels");
    if (scores.empty()) throw ValueError("auc: empty input");

    std::size_t pos = 0;
    for (std::uint8_t y : labels) {
        if (y > 1) throw ValueError("auc: labels must be 0 or 1");
        pos += y;
    }
    std::size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0)
        throw ValueError("auc: undefined, all labels belong to one class");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks across tied score runs keep the half-integer pair
    // counting exact: AUC = (R_pos - pos*(pos+1)/2) / (pos*neg).
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]]) rank_sum_pos += avg_rank;
        i = j;
    }
    double p = static_cast<double>(pos);
    return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

MulticlassReport multiclass_metrics(const std::vector<std::size_t>& predicted,
                                    const std::vector<std::size_t>& actual,
                                    std::size_t n_classes,
                                    const std::vector<std::vector<double>>& scores) {
    if (predicted.size() != actual.size())
        throw ValueError("multiclass_metrics: " + std::to_string(predicted.size()) +
                         " predictions vs " + std::to_string(actual.size()) + " labels");
    if (predicted.empty()) throw ValueError("multiclass_metrics: empty input");
    if (n_classes < 2) throw ValueError("multiclass_metrics: need at least 2 classes");
    if (!scores.empty() && scores.size() != predicted.size())
        throw ValueError("multiclass_metrics: score rows do not match sample count");

    MulticlassReport r;
    r.n_classes = n_classes;

    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i] >= n_classes || actual[i] >= n_classes)
            throw ValueError("multiclass_metrics: class index out of range");
        if (!scores.empty() && scores[i].size() != n_classes)
            throw ValueError("multiclass_metrics: score row " + std::to_string(i) +
                             " has wrong width");
        if (predicted[i] == actual[i]) ++hits;
    }
    r.accuracy = static_cast<double>(hits) / static_cast<double>(predicted.size());

    for (std::size_t cls = 0; cls < n_classes; ++cls) {
        std::vector<std::uint8_t> p1(predicted.size()), a1(predicted.size());
        for (std::size_t i = 0; i < predicted.size(); ++i) {
            p1[i] = predicted[i] == cls ? 1 : 0;
            a1[i] = actual[i] == cls ? 1 : 0;
        }
        BinaryMetrics m = classification_metrics(confusion_counts(p1, a1));
        if (!scores.empty()) {
            bool has_pos = std::find(a1.begin(), a1.end(), 1) != a1.end();
            bool has_neg = std::find(a1.begin(), a1.end(), 0) != a1.end();
            if (has_pos && has_neg) {
                std::vector<double> col(predicted.size());
                for (std::size_t i = 0; i < predicted.size(); ++i) col[i] = scores[i][cls];
                m.auc = auc(col, a1);
            }
        }
        r.per_class.push_back(m);
    }

    auto average = [&](auto pick) -> std::optional<double> {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& m : r.per_class) {
            auto v = pick(m);
            if (v) {
                sum += *v;
                ++n;
            }
        }
        if (n == 0) return std::nullopt;
        return sum / static_cast<double>(n);
    };
    double acc_sum = 0.0;
    for (const auto& m : r.per_class) acc_sum += m.accuracy;
    r.macro.accuracy = acc_sum / static_cast<double>(n_classes);
    r.macro.precision = average([](const BinaryMetrics& m) { return m.precision; });
    r.macro.recall = average([](const BinaryMetrics& m) { return m.recall; });
    r.macro.f1 = average([](const BinaryMetrics& m) { return m.f1; });
    r.macro.auc = average([](const BinaryMetrics& m) { return m.auc; });
    return r;
}

BinaryMetrics binary_summary(const MulticlassReport& report) {
    if (report.n_classes != 2)
        throw ValueError("binary_summary: report covers " + std::to_string(report.n_classes) +
                         " classes, expected 2");
    return report.per_class[1];
}

namespace {
nlohmann::json opt_json(const std::optional<double>& v) {
    if (v) return *v;
    return nullptr;
}
}  // namespace

nlohmann::json metrics_to_json(const BinaryMetrics& m) {
    return {{"accuracy", m.accuracy},
            {"precision", opt_json(m.precision)},
            {"recall", opt_json(m.recall)},
            {"f1", opt_json(m.f1)},
            {"auc", opt_json(m.auc)}};
}

nlohmann::json report_to_json(const MulticlassReport& r) {
    nlohmann::json per_class = nlohmann::json::array();
    for (const auto& m : r.per_class) per_class.push_back(metrics_to_json(m));
    return {{"n_classes", r.n_classes},
            {"accuracy", r.accuracy},
            {"per_class", per_class},
            {"macro", metrics_to_json(r.macro)}};
}

std::string metrics_csv(const std::vector<LabeledMetrics>& rows) {
    std::ostringstream os;
    os.precision(17);
    auto cell = [&](const std::optional<double>& v) {
        os << ",";
        if (v) os << *v;
    };
    os << "head,accuracy,precision,recall,f1,auc\n";
    for (const auto& row : rows) {
        os << row.head << "," << row.m.accuracy;
        cell(row.m.precision);
        cell(row.m.recall);
        cell(row.m.f1);
        cell(row.m.auc);
        os << "\n";
    }
    return os.str();
}

}  // namespace micns::metrics

#include "micns/gradcheck.hpp"

#include <cmath>
#include <sstream>

#include "micns/errors.hpp"

namespace micns {

namespace {
constexpr double kDenomFloor = 1e-6;
}

std::string GradCheckReport::summary() const {
    std::ostringstream os;
    os << (pass ? "PASS" : "FAIL") << " max_rel_error=" << max_rel_error << " tol=" << tol
       << " params=" << entries.size();
    if (!pass) {
        for (const auto& e : entries)
            if (e.max_rel_error > tol)
                os << "\n  " << e.param << "[" << e.worst_index << "] analytic=" << e.analytic
                   << " numeric=" << e.numeric << " rel=" << e.max_rel_error;
    }
    return os.str();
}

GradCheckReport check_gradients(Graph& graph, ValueId root, double h, double tol) {
    if (h <= 0.0) throw ValueError("check_gradients: step h must be positive");

    GradCheckReport report;
    report.h = h;
    report.tol = tol;

    const Tensor& base = graph.forward(root);
    if (base.size() != 1)
        throw ShapeError("check_gradients: root must be scalar, got shape " + base.shape_str());
    graph.backward(root);
    auto analytic = graph.param_gradients();

    for (ValueId pid : graph.params()) {
        const std::string& name = graph.node_name(pid);
        Tensor saved = graph.value(pid);
        const Tensor& ga = analytic.at(name);

        GradCheckEntry entry;
        entry.param = name;
        for (std::size_t i = 0; i < saved.size(); ++i) {
            Tensor probe = saved;
            probe[i] = saved[i] + h;
            graph.set_param(name, probe);
            double up = graph.forward(root)[0];
            probe[i] = saved[i] - h;
            graph.set_param(name, probe);
            double down = graph.forward(root)[0];

            double numeric = (up - down) / (2.0 * h);
            double a = ga[i];
            double denom = std::max({std::fabs(a), std::fabs(numeric), kDenomFloor});
            double rel = std::fabs(a - numeric) / denom;
            if (rel > entry.max_rel_error) {
                entry.max_rel_error = rel;
                entry.worst_index = i;
                entry.analytic = a;
                entry.numeric = numeric;
            }
        }
        graph.set_param(name, saved);
        report.entries.push_back(entry);
        report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    }

    // Leave the graph evaluated at the original point.
    graph.forward(root);
    report.pass = report.max_rel_error < tol;
    return report;
}

}  // namespace micns

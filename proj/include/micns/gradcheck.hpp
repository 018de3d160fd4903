#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "micns/graph.hpp"

namespace micns {

struct GradCheckEntry {
    std::string param;
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_rel_error = 0.0;
    double h = 0.0;
    double tol = 0.0;
    bool pass = false;

    std::string summary() const;
};

/// Compares reverse-mode gradients of a scalar root against central finite
/// differences (f(x+h) - f(x-h)) / 2h, perturbing every element of every
/// trainable parameter. Errors are relative with the denominator floored at
/// 1e-6, so near-zero gradient pairs are judged by absolute difference.
/// Inputs must already be bound; parameter values are restored on return.
GradCheckReport check_gradients(Graph& graph, ValueId root, double h = 1e-5,
                                double tol = 1e-4);

}  // namespace micns

#include "micns/adam.hpp"

#include <cmath>

#include "micns/errors.hpp"

namespace micns {

void AdamState::restore(std::size_t step, ParamMap first, ParamMap second) {
    step_ = step;
    m_ = std::move(first);
    v_ = std::move(second);
}

void adam_step(ParamMap& params, const ParamMap& grads, AdamState& state) {
    state.step_ += 1;
    const AdamConfig& c = state.config_;
    double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step_));
    double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step_));

    for (const auto& [name, g] : grads) {
        auto it = params.find(name);
        if (it == params.end())
            throw ValueError("adam_step: gradient for unknown parameter '" + name + "'");
        Tensor& theta = it->second;
        if (!theta.same_shape(g))
            throw ShapeError("adam_step '" + name + "': gradient shape " + g.shape_str() +
                             " does not match parameter shape " + theta.shape_str());

        Tensor& m = state.m_.try_emplace(name, Tensor::full(g.shape(), 0.0)).first->second;
        Tensor& v = state.v_.try_emplace(name, Tensor::full(g.shape(), 0.0)).first->second;
        for (std::size_t i = 0; i < g.size(); ++i) {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            theta[i] -= c.lr * mhat / (std::sqrt(vhat) + c.epsilon);
        }
    }
}

}  // namespace micns

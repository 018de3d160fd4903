#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "micns/tensor.hpp"

namespace micns {

/// Named parameter collection. std::map keeps iteration order stable, which
/// training and serialization rely on.
using ParamMap = std::map<std::string, Tensor>;

struct AdamConfig {
    double lr = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First/second moment accumulators for Adam, keyed by parameter name.
/// Moment tensors are created lazily on first update of each parameter.
class AdamState {
public:
    AdamState() = default;
    explicit AdamState(AdamConfig config) : config_(config) {}

    const AdamConfig& config() const { return config_; }
    AdamConfig& config() { return config_; }
    std::size_t step_count() const { return step_; }

    const ParamMap& first_moments() const { return m_; }
    const ParamMap& second_moments() const { return v_; }

    /// Restores serialized state.
    void restore(std::size_t step, ParamMap first, ParamMap second);

    friend void adam_step(ParamMap& params, const ParamMap& grads, AdamState& state);

private:
    AdamConfig config_;
    std::size_t step_ = 0;
    ParamMap m_;
    ParamMap v_;
};

/// One Adam update:
///   m <- b1*m + (1-b1)*g        v <- b2*v + (1-b2)*g^2
///   theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
/// Every gradient key must name an existing parameter of the same shape.
void adam_step(ParamMap& params, const ParamMap& grads, AdamState& state);

}  // namespace micns

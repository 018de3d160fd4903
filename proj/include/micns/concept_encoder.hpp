#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "micns/adam.hpp"
#include "micns/graph.hpp"
#include "micns/rng.hpp"

namespace micns::encoder {

/// Per-concept twin-branch encoder. Each concept i owns a positive and a
/// negative branch, e+ = relu(f W+ + b+) and e- = relu(f W- + b-), both of
/// width embed_dim. A single scoring head shared by every concept turns
/// [e+; e-] into a presence probability p, and the concept's feature vector
/// is the mixture p*e+ + (1-p)*e-.
struct EncoderConfig {
    std::size_t n_concepts = 0;
    std::size_t feature_dim = 0;
    std::size_t embed_dim = 16;
};

/// Scalar weight count: n*(2*(F*m + m)) branch weights plus the shared
/// scoring head's 2m + 1.
std::size_t encoder_param_count(const EncoderConfig& cfg);

/// Names of every tensor the encoder owns, in initialization order.
std::vector<std::string> encoder_param_names(const EncoderConfig& cfg);

/// Glorot-uniform weights, zero biases. Draws depend only on `rng` state and
/// the config, so equal seeds give bitwise-equal tensors.
void init_encoder_params(ParamMap& params, const EncoderConfig& cfg, Rng& rng);

struct EncoderNodes {
    ValueId concept_probs;    // B x N
    ValueId concept_features; // B x (N * embed_dim)
    std::vector<ValueId> per_concept_prob;  // each B x 1
    std::vector<ValueId> per_concept_mix;   // each B x embed_dim
};

/// Appends the encoder to `g` on top of a B x F features node. Parameter
/// values are copied out of `params`; missing or misshapen entries throw.
EncoderNodes build_encoder(Graph& g, ValueId features, const ParamMap& params,
                           const EncoderConfig& cfg);

}  // namespace micns::encoder

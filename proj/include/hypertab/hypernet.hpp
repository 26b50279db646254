#pragma once

// The hypernetwork maps a binary feature mask to the flat weight vector of a
// target network, and the ensemble routines push data through the generated
// targets and pull gradients back into the hypernetwork parameters.

#include <cstddef>
#include <span>
#include <vector>

#include "hypertab/augmentation.hpp"
#include "hypertab/mlp.hpp"
#include "hypertab/tensor.hpp"

namespace hypertab {

inline const std::vector<std::size_t> kDefaultHyperHidden = {128, 64, 64};

struct HyperNetwork {
    mlp::MlpSpec hyper_spec;   // [d, hidden..., param_count(target_spec)]
    Vector psi;                // flat parameters of hyper_spec, the only trainable weights
    mlp::MlpSpec target_spec;  // [l, target hidden..., K]

    /// Uniform weights in [-sqrt(1 / fan_in), sqrt(1 / fan_in)], zero biases.
    static HyperNetwork create(std::size_t feature_count, const mlp::MlpSpec& target_spec,
                               const std::vector<std::size_t>& hidden, Rng& rng);

    /// Wraps explicit parameters; throws ContractError if the specs disagree.
    static HyperNetwork from_parts(mlp::MlpSpec hyper_spec, Vector psi, mlp::MlpSpec target_spec);

    std::size_t feature_count() const noexcept { return hyper_spec.input_size(); }
    std::size_t mask_size() const noexcept { return target_spec.input_size(); }
    std::size_t class_count() const noexcept { return target_spec.output_size(); }

    /// Number of trainable parameters; depends only on the specs, never on the pool size.
    std::size_t trainable_parameter_count() const noexcept { return hyper_spec.param_count(); }
};

/// Target spec [l, hidden, K]; hidden = 0 gives a single linear layer.
mlp::MlpSpec make_target_spec(std::size_t mask_size, std::size_t hidden, std::size_t classes);

struct GeneratedTarget {
    AugmentationMask mask;
    Vector theta;
    mlp::Tape hyper_tape;
};

/// theta = H_psi(m) for one mask.
GeneratedTarget generate(const HyperNetwork& hn, const AugmentationMask& mask);

/// theta for several masks at once; row j of the result belongs to masks[j].
Matrix generate_batch(const HyperNetwork& hn, std::span<const AugmentationMask> masks);

struct EnsembleTape {
    std::vector<std::size_t> hyper_layer_sizes;
    std::vector<std::size_t> target_layer_sizes;
    mlp::Tape hyper_tape;             // batched over masks: input is masks.size() x d
    Matrix thetas;                    // masks.size() x param_count(target_spec)
    std::vector<mlp::Tape> target_tapes;
};

struct EnsembleForward {
    std::vector<Matrix> logits;  // one b x K block per mask
    EnsembleTape tape;
};

EnsembleForward ensemble_forward(const HyperNetwork& hn, std::span<const AugmentationMask> masks, ConstMatrixView x);

/// Gradient of sum_j <upstream[j], logits_j> with respect to psi. Gradients
/// reaching the masked inputs are dropped.
Vector ensemble_backward(const HyperNetwork& hn, const EnsembleTape& tape, std::span<const Matrix> upstream);

}  // namespace hypertab

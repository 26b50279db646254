#pragma once

// Fully connected networks over a flat parameter vector.
//
// Flat layout (public contract; the hypernetwork output head depends on it):
// for each layer i in order, the weight block of shape in_i x out_i in
// row-major order, followed by the bias block of length out_i.
//
// Hidden layers use ReLU, the final layer is linear and emits logits.

#include <cstddef>
#include <span>
#include <vector>

#include "hypertab/tensor.hpp"

namespace hypertab::mlp {

class MlpSpec {
public:
    MlpSpec() = default;
    /// Throws ContractError unless there are >= 2 sizes, all >= 1.
    explicit MlpSpec(std::vector<std::size_t> layer_sizes);

    const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
    std::size_t layer_count() const noexcept { return sizes_.empty() ? 0 : sizes_.size() - 1; }
    std::size_t input_size() const noexcept { return sizes_.front(); }
    std::size_t output_size() const noexcept { return sizes_.back(); }
    std::size_t param_count() const noexcept { return param_count_; }

    /// Offset of layer i's weight block inside the flat vector.
    std::size_t weight_offset(std::size_t layer) const noexcept { return offsets_[layer]; }
    std::size_t bias_offset(std::size_t layer) const noexcept {
        return offsets_[layer] + sizes_[layer] * sizes_[layer + 1];
    }

    bool operator==(const MlpSpec& other) const { return sizes_ == other.sizes_; }

private:
    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> offsets_;
    std::size_t param_count_ = 0;
};

/// Sum over consecutive layer pairs of (n_in + 1) * n_out.
std::size_t param_count(const MlpSpec& spec);

/// Parameters of one layer in unpacked form.
struct LayerParams {
    Matrix weight;  // in x out
    Vector bias;    // out
};

/// A flat parameter vector tagged with the spec it belongs to.
struct FlatParams {
    MlpSpec spec;
    Vector data;
};

std::vector<LayerParams> unpack(const MlpSpec& spec, std::span<const double> flat);
Vector pack(const MlpSpec& spec, const std::vector<LayerParams>& layers);

/// Views into a flat vector, no copies.
ConstMatrixView weight_view(const MlpSpec& spec, std::span<const double> flat, std::size_t layer);
std::span<const double> bias_view(const MlpSpec& spec, std::span<const double> flat, std::size_t layer);

/// Cached activations from a forward pass.
struct Tape {
    std::vector<std::size_t> layer_sizes;
    /// inputs[i] is the input fed to layer i (x for i = 0, relu of the previous pre-activation otherwise).
    std::vector<Matrix> inputs;
    /// pre_activations[i] is inputs[i] * W_i + b_i.
    std::vector<Matrix> pre_activations;
};

struct ForwardResult {
    Matrix logits;
    Tape tape;
};

struct BackwardResult {
    Vector grad_params;
    Matrix grad_input;
};

ForwardResult forward(const MlpSpec& spec, std::span<const double> params, ConstMatrixView x);

/// Forward pass that skips the tape, for inference.
Matrix predict(const MlpSpec& spec, std::span<const double> params, ConstMatrixView x);

/// Reverse-mode gradients of <upstream, logits> with respect to the parameters and the input.
/// `want_input_grad = false` skips the final input-gradient product (grad_input is left empty).
BackwardResult backward(const MlpSpec& spec, std::span<const double> params, const Tape& tape,
                        ConstMatrixView upstream, bool want_input_grad = true);

}  // namespace hypertab::mlp

#include "hypertab/mlp.hpp"

#include <algorithm>
#include <string>

#include "hypertab/error.hpp"

namespace hypertab::mlp {

MlpSpec::MlpSpec(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) throw ContractError("MlpSpec: need at least an input and an output size");
    for (std::size_t s : sizes_) {
        if (s == 0) throw ContractError("MlpSpec: layer sizes must be >= 1");
    }
    offsets_.reserve(sizes_.size() - 1);
    for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) {
        offsets_.push_back(param_count_);
        param_count_ += (sizes_[i] + 1) * sizes_[i + 1];
    }
}

std::size_t param_count(const MlpSpec& spec) { return spec.param_count(); }

namespace {

void require_params(const MlpSpec& spec, std::span<const double> flat) {
    if (flat.size() != spec.param_count()) {
        throw ContractError("mlp: expected " + std::to_string(spec.param_count()) + " parameters, got " +
                            std::to_string(flat.size()));
    }
}

}  // namespace

ConstMatrixView weight_view(const MlpSpec& spec, std::span<const double> flat, std::size_t layer) {
    const auto& s = spec.layer_sizes();
    return {flat.data() + spec.weight_offset(layer), s[layer], s[layer + 1]};
}

std::span<const double> bias_view(const MlpSpec& spec, std::span<const double> flat, std::size_t layer) {
    return flat.subspan(spec.bias_offset(layer), spec.layer_sizes()[layer + 1]);
}

std::vector<LayerParams> unpack(const MlpSpec& spec, std::span<const double> flat) {
    require_params(spec, flat);
    std::vector<LayerParams> layers;
    layers.reserve(spec.layer_count());
    for (std::size_t i = 0; i < spec.layer_count(); ++i) {
        auto b = bias_view(spec, flat, i);
        layers.push_back({Matrix::from_view(weight_view(spec, flat, i)), Vector(b.begin(), b.end())});
    }
    return layers;
}

Vector pack(const MlpSpec& spec, const std::vector<LayerParams>& layers) {
    if (layers.size() != spec.layer_count()) throw ContractError("mlp::pack: layer count mismatch");
    Vector flat;
    flat.reserve(spec.param_count());
    const auto& s = spec.layer_sizes();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.weight.rows() != s[i] || l.weight.cols() != s[i + 1] || l.bias.size() != s[i + 1]) {
            throw ContractError("mlp::pack: layer " + std::to_string(i) + " has the wrong shape");
        }
        flat.insert(flat.end(), l.weight.values().begin(), l.weight.values().end());
        flat.insert(flat.end(), l.bias.begin(), l.bias.end());
    }
    return flat;
}

ForwardResult forward(const MlpSpec& spec, std::span<const double> params, ConstMatrixView x) {
    require_params(spec, params);
    if (x.cols() != spec.input_size()) {
        throw ContractError("mlp::forward: input has " + std::to_string(x.cols()) + " columns, network expects " +
                            std::to_string(spec.input_size()));
    }
    ForwardResult out;
    out.tape.layer_sizes = spec.layer_sizes();
    out.tape.inputs.reserve(spec.layer_count());
    out.tape.pre_activations.reserve(spec.layer_count());
    Matrix current = Matrix::from_view(x);
    for (std::size_t i = 0; i < spec.layer_count(); ++i) {
        Matrix pre = affine(current, weight_view(spec, params, i), bias_view(spec, params, i));
        out.tape.inputs.push_back(std::move(current));
        if (i + 1 < spec.layer_count()) {
            current = relu(pre);
        } else {
            out.logits = pre;
        }
        out.tape.pre_activations.push_back(std::move(pre));
    }
    return out;
}

Matrix predict(const MlpSpec& spec, std::span<const double> params, ConstMatrixView x) {
    require_params(spec, params);
    if (x.cols() != spec.input_size()) throw ContractError("mlp::predict: input width mismatch");
    Matrix current = affine(x, weight_view(spec, params, 0), bias_view(spec, params, 0));
    for (std::size_t i = 1; i < spec.layer_count(); ++i) {
        current = affine(relu(current), weight_view(spec, params, i), bias_view(spec, params, i));
    }
    return current;
}

BackwardResult backward(const MlpSpec& spec, std::span<const double> params, const Tape& tape,
                        ConstMatrixView upstream, bool want_input_grad) {
    require_params(spec, params);
    const std::size_t layers = spec.layer_count();
    if (tape.layer_sizes != spec.layer_sizes() || tape.inputs.size() != layers ||
        tape.pre_activations.size() != layers) {
        throw ContractError("mlp::backward: tape was produced by a different network");
    }
    const std::size_t batch = tape.inputs.front().rows();
    if (upstream.rows() != batch || upstream.cols() != spec.output_size()) {
        throw ContractError("mlp::backward: upstream gradient shape does not match the tape");
    }

    BackwardResult out;
    out.grad_params.assign(spec.param_count(), 0.0);
    Matrix delta = Matrix::from_view(upstream);
    for (std::size_t i = layers; i-- > 0;) {
        if (i + 1 < layers) delta = relu_backward(tape.pre_activations[i], delta);
        Matrix gw = matmul_at_b(tape.inputs[i], delta);
        Vector gb = column_sums(delta);
        std::copy(gw.values().begin(), gw.values().end(), out.grad_params.begin() + spec.weight_offset(i));
        std::copy(gb.begin(), gb.end(), out.grad_params.begin() + spec.bias_offset(i));
        if (i > 0 || want_input_grad) delta = matmul_a_bt(delta, weight_view(spec, params, i));
    }
    if (want_input_grad) out.grad_input = std::move(delta);
    return out;
}

}  // namespace hypertab::mlp

#include "hypertab/hypernet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hypertab/error.hpp"

namespace hypertab {

mlp::MlpSpec make_target_spec(std::size_t mask_size, std::size_t hidden, std::size_t classes) {
    if (hidden == 0) return mlp::MlpSpec({mask_size, classes});
    return mlp::MlpSpec({mask_size, hidden, classes});
}

HyperNetwork HyperNetwork::create(std::size_t feature_count, const mlp::MlpSpec& target_spec,
                                  const std::vector<std::size_t>& hidden, Rng& rng) {
    std::vector<std::size_t> sizes{feature_count};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(target_spec.param_count());
    mlp::MlpSpec spec(std::move(sizes));

    Vector psi(spec.param_count(), 0.0);
    const auto& s = spec.layer_sizes();
    for (std::size_t layer = 0; layer < spec.layer_count(); ++layer) {
        const double bound = std::sqrt(1.0 / static_cast<double>(s[layer]));
        std::uniform_real_distribution<double> dist(-bound, bound);
        const std::size_t begin = spec.weight_offset(layer);
        const std::size_t end = spec.bias_offset(layer);
        for (std::size_t i = begin; i < end; ++i) psi[i] = dist(rng);
    }
    return from_parts(std::move(spec), std::move(psi), target_spec);
}

HyperNetwork HyperNetwork::from_parts(mlp::MlpSpec hyper_spec, Vector psi, mlp::MlpSpec target_spec) {
    if (hyper_spec.output_size() != target_spec.param_count()) {
        throw ContractError("HyperNetwork: output size " + std::to_string(hyper_spec.output_size()) +
                            " differs from target parameter count " + std::to_string(target_spec.param_count()));
    }
    if (psi.size() != hyper_spec.param_count()) {
        throw ContractError("HyperNetwork: psi has " + std::to_string(psi.size()) + " entries, spec needs " +
                            std::to_string(hyper_spec.param_count()));
    }
    if (target_spec.input_size() > hyper_spec.input_size()) {
        throw ContractError("HyperNetwork: target input exceeds the feature count");
    }
    return HyperNetwork{std::move(hyper_spec), std::move(psi), std::move(target_spec)};
}

namespace {

void require_mask(const HyperNetwork& hn, const AugmentationMask& mask) {
    if (mask.feature_count() != hn.feature_count()) {
        throw ContractError("hypernet: mask over " + std::to_string(mask.feature_count()) +
                            " features, hypernetwork expects " + std::to_string(hn.feature_count()));
    }
    if (mask.size() != hn.mask_size()) {
        throw ContractError("hypernet: mask selects " + std::to_string(mask.size()) +
                            " features, target network expects " + std::to_string(hn.mask_size()));
    }
}

Matrix stack_binaries(const HyperNetwork& hn, std::span<const AugmentationMask> masks) {
    Matrix m(masks.size(), hn.feature_count());
    for (std::size_t j = 0; j < masks.size(); ++j) {
        require_mask(hn, masks[j]);
        std::copy(masks[j].binary().begin(), masks[j].binary().end(), m.row(j).begin());
    }
    return m;
}

}  // namespace

GeneratedTarget generate(const HyperNetwork& hn, const AugmentationMask& mask) {
    require_mask(hn, mask);
    const Matrix input(1, hn.feature_count(), mask.binary());
    auto fwd = mlp::forward(hn.hyper_spec, hn.psi, input);
    return GeneratedTarget{mask, fwd.logits.values(), std::move(fwd.tape)};
}

Matrix generate_batch(const HyperNetwork& hn, std::span<const AugmentationMask> masks) {
    return mlp::predict(hn.hyper_spec, hn.psi, stack_binaries(hn, masks));
}

EnsembleForward ensemble_forward(const HyperNetwork& hn, std::span<const AugmentationMask> masks, ConstMatrixView x) {
    if (masks.empty()) throw ContractError("ensemble_forward: no masks");
    if (x.cols() != hn.feature_count()) {
        throw ContractError("ensemble_forward: data has " + std::to_string(x.cols()) + " columns, expected " +
                            std::to_string(hn.feature_count()));
    }
    auto hyper = mlp::forward(hn.hyper_spec, hn.psi, stack_binaries(hn, masks));

    EnsembleForward out;
    out.tape.hyper_layer_sizes = hn.hyper_spec.layer_sizes();
    out.tape.target_layer_sizes = hn.target_spec.layer_sizes();
    out.logits.reserve(masks.size());
    out.tape.target_tapes.reserve(masks.size());
    for (std::size_t j = 0; j < masks.size(); ++j) {
        auto fwd = mlp::forward(hn.target_spec, hyper.logits.row(j), apply_mask(x, masks[j]));
        out.logits.push_back(std::move(fwd.logits));
        out.tape.target_tapes.push_back(std::move(fwd.tape));
    }
    out.tape.hyper_tape = std::move(hyper.tape);
    out.tape.thetas = std::move(hyper.logits);
    return out;
}

Vector ensemble_backward(const HyperNetwork& hn, const EnsembleTape& tape, std::span<const Matrix> upstream) {
    if (tape.hyper_layer_sizes != hn.hyper_spec.layer_sizes() ||
        tape.target_layer_sizes != hn.target_spec.layer_sizes()) {
        throw ContractError("ensemble_backward: tape belongs to a different hypernetwork");
    }
    const std::size_t a = tape.target_tapes.size();
    if (upstream.size() != a || tape.thetas.rows() != a) {
        throw ContractError("ensemble_backward: expected " + std::to_string(a) + " upstream blocks, got " +
                            std::to_string(upstream.size()));
    }
    // Row j holds dL/dtheta_j; one batched hypernetwork backward sums the
    // per-mask contributions in mask order.
    Matrix theta_grads(a, hn.target_spec.param_count());
    for (std::size_t j = 0; j < a; ++j) {
        auto grads = mlp::backward(hn.target_spec, tape.thetas.row(j), tape.target_tapes[j], upstream[j], false);
        std::copy(grads.grad_params.begin(), grads.grad_params.end(), theta_grads.row(j).begin());
    }
    return mlp::backward(hn.hyper_spec, hn.psi, tape.hyper_tape, theta_grads, false).grad_params;
}

}  // namespace hypertab

#include "hypertab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "hypertab/error.hpp"

namespace hypertab {

namespace {

// Independent streams for pool sampling, initialization and shuffling.
enum class Stream : std::uint32_t { Pool = 1, Init = 2, Shuffle = 3 };

std::uint64_t derive_seed(std::uint64_t seed, Stream stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs", "must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw ConfigError("learning_rate", "must be a finite positive number");
    }
    if (batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1", "must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2", "must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon", "must be positive");
}

std::size_t TrainConfig::effective_mask_batch(std::size_t pool_size) const {
    const std::size_t requested = mask_batch_size == 0 ? 16 : mask_batch_size;
    return std::min(requested, pool_size);
}

void apply_update(Vector& params, std::span<const double> grad, OptimizerState& state, const TrainConfig& cfg) {
    if (grad.size() != params.size() || state.first_moment.size() != params.size()) {
        throw ContractError("apply_update: parameter, gradient and optimizer state sizes differ");
    }
    ++state.step;
    const double lr = cfg.learning_rate;
    if (cfg.optimizer == OptimizerKind::Sgd) {
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
        return;
    }
    const double b1 = cfg.beta1, b2 = cfg.beta2;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(b1, t);
    const double c2 = 1.0 - std::pow(b2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i];
        double& m = state.first_moment[i];
        double& v = state.second_moment[i];
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        params[i] -= lr * (m / c1) / (std::sqrt(v / c2) + cfg.epsilon);
    }
}

EnsembleLoss ensemble_loss(const HyperNetwork& hn, std::span<const AugmentationMask> masks, ConstMatrixView x,
                           std::span<const int> y) {
    if (masks.empty()) throw ContractError("ensemble_loss: mask batch is empty");
    if (y.size() != x.rows()) throw ContractError("ensemble_loss: label count differs from row count");
    auto fwd = ensemble_forward(hn, masks, x);
    const double inv_a = 1.0 / static_cast<double>(masks.size());
    EnsembleLoss out;
    std::vector<Matrix> upstream;
    upstream.reserve(masks.size());
    for (const auto& logits : fwd.logits) {
        auto ce = softmax_cross_entropy(logits, y);
        out.loss += ce.loss;
        upstream.push_back(scale(ce.grad, inv_a));
    }
    out.loss *= inv_a;
    out.grad_psi = ensemble_backward(hn, fwd.tape, upstream);
    return out;
}

double train_step(HyperNetwork& hn, std::span<const AugmentationMask> mask_batch, ConstMatrixView x,
                  std::span<const int> y, OptimizerState& opt, const TrainConfig& cfg, TrainCounters* counters) {
    auto [loss, grad] = ensemble_loss(hn, mask_batch, x, y);
    if (!std::isfinite(loss) || !all_finite(grad)) {
        throw DivergenceError("training diverged: loss " + std::to_string(loss) + " at optimizer step " +
                              std::to_string(opt.step + 1) + " (try a smaller learning_rate)");
    }
    apply_update(hn.psi, grad, opt, cfg);
    if (counters) {
        ++counters->steps;
        counters->pairs += static_cast<std::uint64_t>(mask_batch.size()) * x.rows();
    }
    return loss;
}

TrainResult train(HyperNetwork hn, const MaskPool& pool, const Dataset& standardized, const Standardization& st,
                  const TrainConfig& cfg) {
    cfg.validate();
    const std::size_t n = standardized.samples();
    if (n == 0) throw DataError("train: dataset is empty");
    if (standardized.features() != hn.feature_count()) {
        throw ContractError("train: dataset has " + std::to_string(standardized.features()) +
                            " features, hypernetwork expects " + std::to_string(hn.feature_count()));
    }
    for (int label : standardized.y) {
        if (label < 0 || static_cast<std::size_t>(label) >= hn.class_count()) {
            throw DataError("train: label " + std::to_string(label) + " outside [0, " +
                            std::to_string(hn.class_count()) + ")");
        }
    }

    const std::size_t b = std::min(cfg.batch_size, n);
    const std::size_t a = cfg.effective_mask_batch(pool.size());
    const std::size_t steps_per_epoch = (n + b - 1) / b;

    Rng rng(derive_seed(cfg.seed, Stream::Shuffle));
    OptimizerState opt(hn.psi.size());
    std::vector<std::size_t> order(n);
    std::vector<std::size_t> mask_order(pool.size());
    std::vector<AugmentationMask> batch_masks;
    batch_masks.reserve(a);

    std::optional<std::ofstream> trace;
    if (cfg.trace_path) {
        trace.emplace(*cfg.trace_path);
        if (!*trace) throw DataError("cannot write loss trace '" + cfg.trace_path->string() + "'");
        *trace << "epoch,mean_loss\n";
    }

    std::vector<double> epoch_losses;
    std::vector<std::uint64_t> pairs_per_epoch;
    TrainCounters counters;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        const std::uint64_t pairs_before = counters.pairs;
        double loss_sum = 0.0;
        for (std::size_t s = 0; s < steps_per_epoch; ++s) {
            const std::size_t begin = s * b;
            const std::size_t end = std::min(begin + b, n);
            Matrix xb(end - begin, standardized.features());
            Labels yb(end - begin);
            for (std::size_t r = begin; r < end; ++r) {
                auto src = standardized.x.row(order[r]);
                std::copy(src.begin(), src.end(), xb.row(r - begin).begin());
                yb[r - begin] = standardized.y[order[r]];
            }
            // a distinct masks from the pool, via a partial shuffle.
            std::iota(mask_order.begin(), mask_order.end(), std::size_t{0});
            for (std::size_t i = 0; i < a; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, mask_order.size() - 1);
                std::swap(mask_order[i], mask_order[pick(rng)]);
            }
            batch_masks.clear();
            for (std::size_t i = 0; i < a; ++i) batch_masks.push_back(pool[mask_order[i]]);

            loss_sum += train_step(hn, batch_masks, xb, yb, opt, cfg, &counters);
        }
        const double mean_loss = loss_sum / static_cast<double>(steps_per_epoch);
        epoch_losses.push_back(mean_loss);
        pairs_per_epoch.push_back(counters.pairs - pairs_before);
        if (trace) *trace << (epoch + 1) << ',' << mean_loss << '\n';
    }

    auto names = standardized.class_names.size() == hn.class_count() ? standardized.class_names
                                                                      : std::vector<std::string>{};
    return TrainResult{HyperTabModel(std::move(hn), pool, st, std::move(names)), std::move(epoch_losses), counters,
                       std::move(pairs_per_epoch)};
}

void HyperTabParams::validate(std::size_t feature_count) const {
    if (masks_no < 1) throw ConfigError("masks_no", "must be >= 1");
    if (mask_size < 1 || mask_size > feature_count) {
        throw ConfigError("mask_size", "must lie in [1, " + std::to_string(feature_count) + "] for this dataset, got " +
                                           std::to_string(mask_size));
    }
    for (auto h : hyper_hidden) {
        if (h < 1) throw ConfigError("hyper_hidden", "hidden layer sizes must be >= 1");
    }
    train.validate();
}

TrainResult fit(const Dataset& raw, const HyperTabParams& params) {
    params.validate(raw.features());
    if (raw.classes() < 1) throw DataError("fit: dataset has no classes");
    const Standardization st = standardize_fit(raw.x);
    Dataset z = raw;
    z.x = standardize_apply(raw.x, st);

    const std::uint64_t seed = params.train.seed;
    const MaskPool pool = sample_pool(raw.features(), params.mask_size, params.masks_no, derive_seed(seed, Stream::Pool));
    Rng init_rng(derive_seed(seed, Stream::Init));
    auto hn = HyperNetwork::create(raw.features(), make_target_spec(params.mask_size, params.target_size, raw.classes()),
                                   params.hyper_hidden, init_rng);
    return train(std::move(hn), pool, z, st, params.train);
}

}  // namespace hypertab

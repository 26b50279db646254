#pragma once

// Optimization of the hypernetwork parameters. A training sample is an
// (augmentation, data point) pair; each step draws a minibatch of masks from
// the fixed pool and a minibatch of rows, and averages cross-entropy over
// every pair.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "hypertab/augmentation.hpp"
#include "hypertab/data.hpp"
#include "hypertab/hypernet.hpp"
#include "hypertab/model.hpp"

namespace hypertab {

enum class OptimizerKind { Adam, Sgd };

struct TrainConfig {
    std::size_t epochs = 100;
    double learning_rate = 3e-3;
    std::size_t batch_size = 32;
    /// 0 selects min(pool size, 16).
    std::size_t mask_batch_size = 0;
    std::uint64_t seed = 0;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    /// When set, "epoch,mean_loss" lines are written here.
    std::optional<std::filesystem::path> trace_path;

    /// Throws ConfigError naming the offending field.
    void validate() const;
    std::size_t effective_mask_batch(std::size_t pool_size) const;
};

struct OptimizerState {
    Vector first_moment;
    Vector second_moment;
    std::uint64_t step = 0;

    explicit OptimizerState(std::size_t parameter_count)
        : first_moment(parameter_count, 0.0), second_moment(parameter_count, 0.0) {}
};

/// Applies one update to params in place. A zero gradient leaves params unchanged.
void apply_update(Vector& params, std::span<const double> grad, OptimizerState& state, const TrainConfig& cfg);

/// Mean cross-entropy over all (mask, row) pairs and its gradient w.r.t. psi, without updating.
struct EnsembleLoss {
    double loss = 0.0;
    Vector grad_psi;
};
EnsembleLoss ensemble_loss(const HyperNetwork& hn, std::span<const AugmentationMask> masks, ConstMatrixView x,
                           std::span<const int> y);

/// Counts of work performed, for auditing the training loop.
struct TrainCounters {
    std::uint64_t steps = 0;
    std::uint64_t pairs = 0;  // (augmentation, sample) pairs whose loss was evaluated
};

/// One optimizer step on psi. Returns the pre-update loss. Throws
/// DivergenceError if the loss is not finite.
double train_step(HyperNetwork& hn, std::span<const AugmentationMask> mask_batch, ConstMatrixView x,
                  std::span<const int> y, OptimizerState& opt, const TrainConfig& cfg,
                  TrainCounters* counters = nullptr);

struct TrainResult {
    HyperTabModel model;
    std::vector<double> epoch_losses;  // mean step loss per epoch
    TrainCounters counters;
    std::vector<std::uint64_t> pairs_per_epoch;
};

/// Runs epochs x ceil(n / batch_size) steps on already-standardized data and
/// packages the result together with the standardization it was trained under.
TrainResult train(HyperNetwork hn, const MaskPool& pool, const Dataset& standardized, const Standardization& st,
                  const TrainConfig& cfg);

/// Model hyperparameters plus training settings.
struct HyperTabParams {
    std::size_t masks_no = 100;
    std::size_t mask_size = 10;
    std::size_t target_size = 20;  // hidden width of the target networks; 0 = linear targets
    std::vector<std::size_t> hyper_hidden = kDefaultHyperHidden;
    TrainConfig train;

    /// Checks everything that can be checked against a feature count.
    void validate(std::size_t feature_count) const;
};

/// Fits standardization on `raw`, samples the mask pool, initializes the
/// hypernetwork and trains it. All randomness derives from params.train.seed.
TrainResult fit(const Dataset& raw, const HyperTabParams& params);

}  // namespace hypertab

#pragma once

// Evaluation protocols built on top of the trainer: stratified cross-validation
// over several seeds, hyperparameter grid search, the synthetic
// irrelevant-feature study, and the benchmark runner.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hypertab/data.hpp"
#include "hypertab/metrics.hpp"
#include "hypertab/trainer.hpp"

namespace hypertab {

struct FoldScore {
    std::uint64_t seed = 0;
    std::size_t fold = 0;
    double balanced_accuracy = 0.0;
};

struct CvReport {
    std::vector<FoldScore> scores;  // seeds x folds, ordered by (seed position, fold)
    MeanStd summary;
};

/// Mean over every fold score; the spread is the sample standard deviation of
/// the per-seed means (one seed: of the fold scores).
MeanStd summarize_scores(std::span<const FoldScore> scores);

/// Stratified k-fold CV repeated for every seed. Standardization is fitted on
/// each training fold only. The training seed of each run mixes the CV seed
/// and the fold index.
CvReport cross_validate(const Dataset& ds, const HyperTabParams& params, std::size_t folds,
                        std::span<const std::uint64_t> seeds);

struct GridSpec {
    std::vector<std::size_t> masks_no;
    std::vector<std::size_t> mask_size;
    std::vector<std::size_t> target_size;
    std::vector<double> learning_rate;
    /// Maximum number of points to evaluate; larger grids are subsampled with `seed`.
    std::size_t budget = 60;
    std::uint64_t seed = 0;

    void validate(std::size_t feature_count) const;
};

struct GridPoint {
    std::size_t masks_no = 0;
    std::size_t mask_size = 0;
    std::size_t target_size = 0;
    double learning_rate = 0.0;

    bool operator==(const GridPoint&) const = default;
};

/// Cartesian product in fixed nesting order (masks_no, mask_size, target_size, learning_rate),
/// subsampled without replacement to `budget` points when larger; original order is kept.
std::vector<GridPoint> grid_points(const GridSpec& spec);

struct GridResult {
    std::size_t index = 0;  // position in grid_points()
    GridPoint point;
    bool diverged = false;
    MeanStd score;
    std::size_t trainable_parameters = 0;
};

struct GridSearchReport {
    std::vector<GridResult> results;
    std::size_t best = 0;  // index into results
};

/// Evaluates each point by cross-validation and picks the highest mean
/// balanced accuracy; ties go to the smaller target_size, then smaller
/// masks_no, then the earlier point. Diverged points are never selected.
GridSearchReport grid_search(const Dataset& ds, const HyperTabParams& base, const GridSpec& grid, std::size_t folds,
                             std::span<const std::uint64_t> seeds);

/// Chooses the best result according to the rule above; throws DivergenceError when all diverged.
std::size_t select_best(std::span<const GridResult> results);

std::string format_grid_results(const GridSearchReport& report);

HyperTabParams with_point(HyperTabParams base, const GridPoint& p);

struct LogitRecord {
    std::size_t target = 0;
    bool informative = false;
    std::size_t sample = 0;
    int true_class = 0;
    std::size_t logit_class = 0;
    double logit = 0.0;
};

struct SyntheticReport {
    std::uint64_t seed = 0;
    std::size_t informative_column = 0;
    double test_accuracy = 0.0;
    std::size_t informative_targets = 0;
    std::size_t total_targets = 0;
    double informative_fraction = 0.0;
    double mean_abs_logit_informative = 0.0;
    double mean_abs_logit_noise = 0.0;
    std::vector<LogitRecord> logits;  // every target's logits on the held-out rows
};

/// Defaults for the synthetic study: 100 masks of 10 features, targets with 20
/// hidden units, data batches of 2.
HyperTabParams synthetic_params();

/// Generates the synthetic dataset, holds out one stratified fifth (2 samples
/// per class), trains on the rest and inspects the individual targets.
SyntheticReport run_synthetic(std::uint64_t seed, const HyperTabParams& params);

std::string format_logit_histogram_csv(const SyntheticReport& report);
std::string format_synthetic_summary(std::span<const SyntheticReport> reports);

}  // namespace hypertab

#pragma once

// Benchmark runner: grid search plus repeated cross-validation for every
// dataset in a manifest, compared against reference bands. Per-fold scores
// are cached on disk so the report can be regenerated without retraining.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hypertab/experiment.hpp"

namespace hypertab {

struct BenchmarkDataset {
    std::string name;  // cache key, e.g. "wbc"
    std::string title;
    std::string path;  // relative to the manifest directory unless absolute
    std::string label_column = "last";
    std::string source;
    std::string checksum;  // fnv1a-64 hex of the file; empty skips verification
    /// Reference mean and standard deviation of balanced accuracy, in percent.
    double reference_mean = 0.0;
    double reference_std = 0.0;
    std::string reference_note;
    /// Other methods' reference scores on this dataset, in percent, for the mean-rank summary.
    std::map<std::string, double> baselines;
    HyperTabParams params;  // grid points override masks_no, mask_size, target_size, learning_rate
    GridSpec grid;

    /// Pass threshold: reference mean minus two reference standard deviations.
    double band() const noexcept { return reference_mean - 2.0 * reference_std; }
};

struct BenchmarkManifest {
    std::string method = "HyperTab";
    std::size_t folds = 5;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    std::vector<std::uint64_t> grid_seeds{0};
    std::vector<BenchmarkDataset> datasets;
    std::filesystem::path root;  // directory the dataset paths are resolved against
};

BenchmarkManifest parse_benchmark_manifest(const std::string& json_text, const std::filesystem::path& root);
BenchmarkManifest read_benchmark_manifest(const std::filesystem::path& path);

enum class BenchmarkStatus { Passed, Failed, Missing, ChecksumMismatch };
const char* to_string(BenchmarkStatus s);

struct BenchmarkEntry {
    std::string name;
    std::string title;
    BenchmarkStatus status = BenchmarkStatus::Missing;
    std::string note;
    std::optional<GridPoint> point;
    std::vector<FoldScore> scores;
    MeanStd score;  // fractions in [0, 1]
    double reference_mean = 0.0;
    double reference_std = 0.0;
    double band = 0.0;  // percent

    bool evaluated() const noexcept {
        return status == BenchmarkStatus::Passed || status == BenchmarkStatus::Failed;
    }
};

struct BenchmarkReport {
    std::vector<BenchmarkEntry> entries;
    /// Mean ranks over evaluated datasets; empty when nothing was evaluated or no baselines exist.
    std::vector<std::string> rank_methods;
    Vector mean_ranks;
};

struct BenchmarkOptions {
    std::optional<std::size_t> budget;  // overrides every dataset's grid budget
    std::filesystem::path cache_dir = "benchmark_cache";
    std::vector<std::string> only;  // restrict to these dataset names; empty means all
};

/// Runs grid search and the final repeated CV for every available dataset and
/// writes <cache_dir>/<name>/{fold_scores.csv,grid_results.csv,selected.json}.
/// Missing or mismatching files are skipped with a warning and never pass.
BenchmarkReport run_benchmark(const BenchmarkManifest& manifest, const BenchmarkOptions& options);

/// Rebuilds the report from the cache alone. Given the same cache it is
/// bit-identical to what run_benchmark returned.
BenchmarkReport summarize_benchmark(const BenchmarkManifest& manifest, const BenchmarkOptions& options);

std::string format_benchmark_csv(const BenchmarkReport& report);
std::string format_benchmark_text(const BenchmarkReport& report);

std::string format_fold_scores(const std::vector<FoldScore>& scores);
std::vector<FoldScore> parse_fold_scores(const std::string& text);

}  // namespace hypertab

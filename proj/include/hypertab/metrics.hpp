#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hypertab/tensor.hpp"

namespace hypertab {

/// Counts indexed [true class][predicted class].
class ConfusionMatrix {
public:
    ConfusionMatrix(std::span<const int> y_true, std::span<const int> y_pred, std::size_t classes);

    std::size_t classes() const noexcept { return k_; }
    std::uint64_t operator()(std::size_t truth, std::size_t predicted) const noexcept {
        return counts_[truth * k_ + predicted];
    }
    std::uint64_t total() const noexcept { return total_; }
    std::uint64_t support(std::size_t truth) const noexcept;

private:
    std::size_t k_;
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

/// Mean per-class recall over the classes that occur in y_true. When every
/// present class has the same support the result equals accuracy() exactly.
/// Throws ContractError on empty or unequal-length input.
double balanced_accuracy(std::span<const int> y_true, std::span<const int> y_pred);

double accuracy(std::span<const int> y_true, std::span<const int> y_pred);

/// Scores of methods (rows) on datasets (columns); higher is better.
struct ScoreTable {
    std::vector<std::string> methods;
    std::vector<std::string> datasets;
    Matrix scores;  // methods x datasets

    /// Throws ContractError if the table is not rectangular or holds non-finite values.
    void validate() const;
};

/// Per dataset, rank methods by descending score (1 = best, ties get the
/// average of the tied positions), then average each method's ranks.
Vector mean_ranks(const ScoreTable& table);

/// CSV layout: header "dataset,<method>,<method>,...", one row per dataset.
ScoreTable read_score_table(const std::filesystem::path& path);
ScoreTable parse_score_table(const std::string& text);
std::string format_score_table(const ScoreTable& table);
void write_score_table(const ScoreTable& table, const std::filesystem::path& path);

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation (n - 1); 0 for a single value
};
MeanStd mean_std(std::span<const double> values);

/// "97.58 (1.11)": percentages with two decimals, as in results tables.
std::string format_mean_std(const MeanStd& ms);

}  // namespace hypertab

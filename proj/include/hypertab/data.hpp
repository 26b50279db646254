#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hypertab/tensor.hpp"

namespace hypertab {

struct Dataset {
    Matrix x;                                // n x d
    Labels y;                                // n labels, dense in [0, K)
    std::vector<std::string> feature_names;  // d names
    std::vector<std::string> class_names;    // K names, index = label

    std::size_t samples() const noexcept { return x.rows(); }
    std::size_t features() const noexcept { return x.cols(); }
    std::size_t classes() const noexcept { return class_names.size(); }
};

/// How to find the label column: by header name, by 0-based position, or the
/// last column. `none()` reads every column as a feature and leaves y empty.
struct LabelColumn {
    std::optional<std::string> name;
    std::optional<std::size_t> index;
    bool absent = false;

    static LabelColumn last() { return {}; }
    static LabelColumn named(std::string n) { return {std::move(n), std::nullopt}; }
    static LabelColumn at(std::size_t i) { return {std::nullopt, i}; }
    static LabelColumn none() { return {std::nullopt, std::nullopt, true}; }
    /// "last", "none", a non-negative integer, or a header name.
    static LabelColumn parse(const std::string& text);
};

/// Reads an RFC-4180-style CSV. Features must be numeric and finite; labels
/// are mapped to dense indices in order of first appearance. Throws DataError
/// with the 1-based line number for ragged rows, non-numeric or missing cells.
Dataset load_csv(const std::filesystem::path& path, const LabelColumn& label, bool has_header = true);
Dataset parse_csv(const std::string& text, const LabelColumn& label, bool has_header = true);

/// Writes the features followed by a "label" column holding class names.
void save_csv(const Dataset& ds, const std::filesystem::path& path);
std::string to_csv(const Dataset& ds);

/// Splits one CSV record into fields, honouring double-quote escaping.
std::vector<std::string> split_csv_record(const std::string& line);
/// Quotes a field when it contains a separator, quote or newline.
std::string quote_csv_field(const std::string& field);

Dataset subset(const Dataset& ds, std::span<const std::size_t> rows);

struct Standardization {
    Vector mean;
    Vector stddev;  // strictly positive; 1 where the training column is constant

    std::size_t features() const noexcept { return mean.size(); }
};

/// Per-column mean and population standard deviation. Requires n >= 2.
Standardization standardize_fit(ConstMatrixView x);
Matrix standardize_apply(ConstMatrixView x, const Standardization& st);
Vector standardize_apply(std::span<const double> x, const Standardization& st);

/// Total number of rows ever passed to standardize_fit in this process.
/// Used to audit that evaluation fits statistics on training folds only.
std::uint64_t standardize_fit_rows_seen() noexcept;

struct SplitPlan {
    std::size_t folds = 0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> fold_of;  // fold index of every sample

    std::vector<std::size_t> test_indices(std::size_t fold) const;
    std::vector<std::size_t> train_indices(std::size_t fold) const;
};

/// Stratified k-fold assignment: each class is shuffled with the seed and
/// dealt round-robin, so per-fold class counts differ by at most one.
/// Warns when a class has fewer members than folds; throws ContractError when
/// folds < 2 or folds > n.
SplitPlan stratified_kfold(std::span<const int> labels, std::size_t folds, std::uint64_t seed);

struct SyntheticDataset {
    Dataset data;
    std::size_t informative_column = 0;
};

/// 50 samples x 50 features, 5 balanced classes. 49 columns are Uniform[0, 1]
/// noise; the informative column equals class / 4 exactly. Its position is
/// drawn from the seed.
SyntheticDataset make_synthetic(std::uint64_t seed);

/// 64-bit FNV-1a over raw bytes, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::span<const unsigned char> bytes);
std::string file_checksum(const std::filesystem::path& path);

struct DatasetManifest {
    std::string name;
    std::string path;
    std::string label_column;
    std::size_t samples = 0;
    std::size_t features = 0;
    std::size_t classes = 0;
    std::string checksum;  // fnv1a-64 of the file bytes
};

DatasetManifest describe_dataset(const std::string& name, const std::filesystem::path& path,
                                 const std::string& label_column, const Dataset& ds);
void write_manifest(const DatasetManifest& m, const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

}  // namespace hypertab

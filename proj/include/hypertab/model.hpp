#pragma once

// A trained HyperTab ensemble: hypernetwork, the fixed mask pool, and the
// feature standardization fitted on the training data. Prediction averages
// the logits of all target networks.
//
// Masks are stored in canonical (lexicographic) order and every target's
// weights are generated once at construction, so prediction never runs the
// hypernetwork and does not depend on the order the pool was supplied in.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hypertab/augmentation.hpp"
#include "hypertab/data.hpp"
#include "hypertab/hypernet.hpp"

namespace hypertab {

inline constexpr std::uint32_t kModelFormatVersion = 1;

class HyperTabModel {
public:
    /// class_names may be empty; otherwise it needs one entry per class.
    HyperTabModel(HyperNetwork hypernet, const MaskPool& pool, Standardization standardization,
                  std::vector<std::string> class_names = {});

    const HyperNetwork& hypernetwork() const noexcept { return hn_; }
    const MaskPool& pool() const noexcept { return pool_; }
    const Standardization& standardization() const noexcept { return st_; }
    const Matrix& thetas() const noexcept { return thetas_; }
    const std::vector<std::string>& class_names() const noexcept { return class_names_; }

    std::size_t feature_count() const noexcept { return hn_.feature_count(); }
    std::size_t class_count() const noexcept { return hn_.class_count(); }
    std::size_t ensemble_size() const noexcept { return pool_.size(); }

    /// Mean over all targets of T_theta_j(x[c_j]), for one raw (unstandardized) sample.
    Vector predict_logits(std::span<const double> x) const;
    /// Row-wise predict_logits over a batch of raw samples.
    Matrix predict_logits(ConstMatrixView x) const;
    /// Same as predict_logits but regenerates every theta through the hypernetwork.
    Matrix predict_logits_uncached(ConstMatrixView x) const;

    /// argmax of the mean logits, ties to the lowest class index.
    int predict_class(std::span<const double> x) const;
    Labels predict_classes(ConstMatrixView x) const;

    /// Logits of each target separately (index j follows pool().masks()).
    std::vector<Matrix> per_target_logits(ConstMatrixView x) const;

private:
    HyperNetwork hn_;
    MaskPool pool_;
    Standardization st_;
    std::vector<std::string> class_names_;
    Matrix thetas_;
};

/// Index of the largest entry, lowest index on ties.
int argmax(std::span<const double> values);

/// Binary container, little-endian throughout:
///   "HTAB" | u32 version | hyper spec | target spec | psi | masks | mean | stddev | class names
///   | u64 FNV-1a checksum
/// (see docs/model_format.md for the full layout).
std::vector<unsigned char> serialize(const HyperTabModel& model);
HyperTabModel deserialize(std::span<const unsigned char> bytes);

void save(const HyperTabModel& model, const std::filesystem::path& path);
HyperTabModel load(const std::filesystem::path& path);

}  // namespace hypertab

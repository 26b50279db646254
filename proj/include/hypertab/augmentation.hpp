#pragma once

// Feature-subset augmentations. Feature indices are 0-based throughout.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "hypertab/tensor.hpp"

namespace hypertab {

using Rng = std::mt19937_64;

/// A subset of l distinct feature indices out of d, kept sorted ascending,
/// together with its {0,1}^d indicator encoding.
class AugmentationMask {
public:
    /// Indices may arrive in any order; they are sorted. Throws ContractError on
    /// an empty set, duplicates, or indices >= d.
    AugmentationMask(std::vector<std::size_t> indices, std::size_t d);

    std::size_t feature_count() const noexcept { return d_; }
    std::size_t size() const noexcept { return indices_.size(); }
    const std::vector<std::size_t>& indices() const noexcept { return indices_; }
    const Vector& binary() const noexcept { return binary_; }
    bool contains(std::size_t feature) const noexcept { return feature < d_ && binary_[feature] == 1.0; }

    auto operator<=>(const AugmentationMask& other) const {
        if (auto c = d_ <=> other.d_; c != 0) return c;
        return indices_ <=> other.indices_;
    }
    bool operator==(const AugmentationMask& other) const = default;

private:
    std::size_t d_;
    std::vector<std::size_t> indices_;
    Vector binary_;
};

/// m_j = 1 for j in indices, 0 otherwise. Throws ContractError on empty,
/// duplicate or out-of-range input.
Vector mask_to_binary(std::span<const std::size_t> indices, std::size_t d);

/// x[c]: the selected coordinates in ascending index order.
Vector apply_mask(std::span<const double> x, const AugmentationMask& mask);
/// Column subset of a batch; row i equals apply_mask(x.row(i), mask).
Matrix apply_mask(ConstMatrixView x, const AugmentationMask& mask);

/// The fixed set of augmentations that defines an ensemble. All masks share d and l.
class MaskPool {
public:
    explicit MaskPool(std::vector<AugmentationMask> masks);

    std::size_t size() const noexcept { return masks_.size(); }
    std::size_t feature_count() const noexcept { return masks_.front().feature_count(); }
    std::size_t mask_size() const noexcept { return masks_.front().size(); }
    const std::vector<AugmentationMask>& masks() const noexcept { return masks_; }
    const AugmentationMask& operator[](std::size_t i) const noexcept { return masks_[i]; }

    /// Same masks in lexicographic index order.
    MaskPool canonical() const;

private:
    std::vector<AugmentationMask> masks_;
};

/// Binomial coefficient, saturating at UINT64_MAX.
std::uint64_t binomial_saturating(std::size_t n, std::size_t k);

/// Draws a masks of size l uniformly at random. Masks are pairwise distinct
/// whenever C(d, l) >= a (rejection, at most 1000 retries per mask); otherwise
/// duplicates are allowed and a warning is logged.
MaskPool sample_pool(std::size_t d, std::size_t l, std::size_t a, Rng& rng);
MaskPool sample_pool(std::size_t d, std::size_t l, std::size_t a, std::uint64_t seed);

}  // namespace hypertab

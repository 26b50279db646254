#include "hypertab/augmentation.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>
#include <string>

#include "hypertab/error.hpp"
#include "hypertab/log.hpp"

namespace hypertab {

namespace {

constexpr int kMaxRetriesPerMask = 1000;

}  // namespace

Vector mask_to_binary(std::span<const std::size_t> indices, std::size_t d) {
    if (indices.empty()) throw ContractError("mask: at least one feature must be selected");
    Vector binary(d, 0.0);
    for (std::size_t j : indices) {
        if (j >= d) throw ContractError("mask: index " + std::to_string(j) + " out of range for d=" + std::to_string(d));
        if (binary[j] != 0.0) throw ContractError("mask: duplicate index " + std::to_string(j));
        binary[j] = 1.0;
    }
    return binary;
}

AugmentationMask::AugmentationMask(std::vector<std::size_t> indices, std::size_t d)
    : d_(d), indices_(std::move(indices)), binary_(mask_to_binary(indices_, d)) {
    std::sort(indices_.begin(), indices_.end());
}

Vector apply_mask(std::span<const double> x, const AugmentationMask& mask) {
    if (x.size() != mask.feature_count()) {
        throw ContractError("apply_mask: vector has " + std::to_string(x.size()) + " entries, mask expects " +
                            std::to_string(mask.feature_count()));
    }
    Vector out;
    out.reserve(mask.size());
    for (std::size_t j : mask.indices()) out.push_back(x[j]);
    return out;
}

Matrix apply_mask(ConstMatrixView x, const AugmentationMask& mask) {
    if (x.cols() != mask.feature_count()) {
        throw ContractError("apply_mask: matrix has " + std::to_string(x.cols()) + " columns, mask expects " +
                            std::to_string(mask.feature_count()));
    }
    const auto& idx = mask.indices();
    Matrix out(x.rows(), idx.size());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto src = x.row(i);
        auto dst = out.row(i);
        for (std::size_t c = 0; c < idx.size(); ++c) dst[c] = src[idx[c]];
    }
    return out;
}

MaskPool::MaskPool(std::vector<AugmentationMask> masks) : masks_(std::move(masks)) {
    if (masks_.empty()) throw ContractError("MaskPool: a pool needs at least one mask");
    for (const auto& m : masks_) {
        if (m.feature_count() != masks_.front().feature_count() || m.size() != masks_.front().size()) {
            throw ContractError("MaskPool: all masks must share feature count and mask size");
        }
    }
}

MaskPool MaskPool::canonical() const {
    auto sorted = masks_;
    std::sort(sorted.begin(), sorted.end());
    return MaskPool(std::move(sorted));
}

std::uint64_t binomial_saturating(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t result = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        // result * (n - k + i) / i stays integral at every step.
        const std::uint64_t num = n - k + i;
        const std::uint64_t g = std::gcd(result, static_cast<std::uint64_t>(i));
        const std::uint64_t r = result / g;
        const std::uint64_t q = num / (i / g);
        if (r != 0 && q > kMax / r) return kMax;
        result = r * q;
    }
    return result;
}

namespace {

std::vector<std::size_t> draw_subset(std::size_t d, std::size_t l, Rng& rng, std::vector<std::size_t>& scratch) {
    scratch.resize(d);
    std::iota(scratch.begin(), scratch.end(), std::size_t{0});
    // Partial Fisher-Yates: the first l slots end up a uniform l-subset.
    for (std::size_t i = 0; i < l; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, d - 1);
        std::swap(scratch[i], scratch[pick(rng)]);
    }
    std::vector<std::size_t> subset(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(l));
    std::sort(subset.begin(), subset.end());
    return subset;
}

}  // namespace

MaskPool sample_pool(std::size_t d, std::size_t l, std::size_t a, Rng& rng) {
    if (l < 1 || l > d) {
        throw ContractError("sample_pool: mask size " + std::to_string(l) + " must lie in [1, " + std::to_string(d) + "]");
    }
    if (a < 1) throw ContractError("sample_pool: need at least one mask");

    const bool enforce_unique = binomial_saturating(d, l) >= a;
    if (!enforce_unique) {
        warn("sample_pool: only " + std::to_string(binomial_saturating(d, l)) + " distinct masks exist for d=" +
             std::to_string(d) + ", l=" + std::to_string(l) + "; the pool of " + std::to_string(a) +
             " will contain duplicates");
    }

    std::vector<AugmentationMask> masks;
    masks.reserve(a);
    std::set<std::vector<std::size_t>> seen;
    std::vector<std::size_t> scratch;
    for (std::size_t k = 0; k < a; ++k) {
        auto subset = draw_subset(d, l, rng, scratch);
        if (enforce_unique) {
            int retries = 0;
            while (seen.contains(subset) && retries < kMaxRetriesPerMask) {
                subset = draw_subset(d, l, rng, scratch);
                ++retries;
            }
            if (seen.contains(subset)) {
                warn("sample_pool: retry budget exhausted, accepting a duplicate mask");
            }
            seen.insert(subset);
        }
        masks.emplace_back(std::move(subset), d);
    }
    return MaskPool(std::move(masks));
}

MaskPool sample_pool(std::size_t d, std::size_t l, std::size_t a, std::uint64_t seed) {
    Rng rng(seed);
    return sample_pool(d, l, a, rng);
}

}  // namespace hypertab

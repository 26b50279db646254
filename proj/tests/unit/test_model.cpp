#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>
#include <filesystem>

#include "gradcheck.hpp"
#include "hypertab/error.hpp"
#include "hypertab/model.hpp"

using namespace hypertab;
using namespace hypertab::testing;

namespace {

HyperTabModel make_model(std::uint64_t seed, std::vector<std::string> names = {"a", "b", "c"}) {
    Rng rng(seed);
    auto hn = HyperNetwork::create(6, make_target_spec(3, 4, 3), {8, 8}, rng);
    const auto pool = sample_pool(6, 3, 5, rng);
    Standardization st{random_vector(6, rng), random_vector(6, rng, 0.5, 2.0)};
    return HyperTabModel(std::move(hn), pool, std::move(st), std::move(names));
}

std::uint64_t fnv1a(std::span<const unsigned char> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Rewrites the trailing checksum so that deliberate edits get past it.
void reseal(std::vector<unsigned char>& bytes) {
    const auto h = fnv1a(std::span(bytes).first(bytes.size() - 8));
    for (int i = 0; i < 8; ++i) bytes[bytes.size() - 8 + i] = static_cast<unsigned char>(h >> (8 * i));
}

}  // namespace

TEST(Model, RoundTripIsExact) {
    const auto m = make_model(1);
    const auto bytes = serialize(m);
    const auto back = deserialize(bytes);
    EXPECT_EQ(serialize(back), bytes);
    EXPECT_EQ(back.hypernetwork().psi, m.hypernetwork().psi);
    EXPECT_EQ(back.class_names(), m.class_names());

    Rng rng(2);
    const Matrix x = random_matrix(4, 6, rng);
    EXPECT_EQ(back.predict_logits(x), m.predict_logits(x));
}

TEST(Model, RoundTripWithoutClassNames) {
    const auto m = make_model(3, {});
    const auto back = deserialize(serialize(m));
    EXPECT_TRUE(back.class_names().empty());
}

TEST(Model, SaveAndLoad) {
    const auto path = std::filesystem::temp_directory_path() / "hypertab_model_test.htab";
    const auto m = make_model(4);
    save(m, path);
    EXPECT_EQ(serialize(load(path)), serialize(m));
    std::filesystem::remove(path);
    EXPECT_THROW(load(path), DataError);
}

TEST(Model, BadMagic) {
    auto bytes = serialize(make_model(5));
    bytes[0] = 'X';
    EXPECT_THROW(deserialize(bytes), CorruptFileError);
}

TEST(Model, WrongVersion) {
    auto bytes = serialize(make_model(6));
    bytes[4] = 2;
    EXPECT_THROW(deserialize(bytes), VersionMismatchError);
}

TEST(Model, TruncationIsDetected) {
    const auto bytes = serialize(make_model(7));
    for (std::size_t keep : {std::size_t{3}, std::size_t{12}, bytes.size() / 2, bytes.size() - 1}) {
        const std::vector<unsigned char> cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(keep));
        EXPECT_THROW(deserialize(cut), CorruptFileError) << keep;
    }
}

TEST(Model, FlippedByteFailsTheChecksum) {
    auto bytes = serialize(make_model(8));
    bytes[40] ^= 0x10;
    EXPECT_THROW(deserialize(bytes), CorruptFileError);
}

TEST(Model, NonPositiveStddevIsInconsistent) {
    auto bytes = serialize(make_model(9, {}));
    // Layout tail: ... stddev doubles | u64 class-name count (0) | u64 checksum.
    const std::size_t last_stddev = bytes.size() - 8 - 8 - 8;
    std::memset(bytes.data() + last_stddev, 0, 8);
    reseal(bytes);
    EXPECT_THROW(deserialize(bytes), InconsistentModelError);
}

TEST(Model, ConstructorRejectsMismatches) {
    Rng rng(10);
    auto hn = HyperNetwork::create(6, make_target_spec(3, 4, 3), {8}, rng);
    const Standardization st{Vector(6, 0.0), Vector(6, 1.0)};
    EXPECT_THROW(HyperTabModel(hn, sample_pool(7, 3, 2, rng), st), InconsistentModelError);
    EXPECT_THROW(HyperTabModel(hn, sample_pool(6, 2, 2, rng), st), InconsistentModelError);
    EXPECT_THROW(HyperTabModel(hn, sample_pool(6, 3, 2, rng), Standardization{Vector(5), Vector(5, 1.0)}),
                 InconsistentModelError);
    EXPECT_THROW(HyperTabModel(hn, sample_pool(6, 3, 2, rng), st, {"only", "two"}), InconsistentModelError);
}

TEST(Model, PoolOrderDoesNotChangePredictions) {
    Rng rng(11);
    const auto hn = HyperNetwork::create(6, make_target_spec(3, 4, 3), {8, 8}, rng);
    const auto pool = sample_pool(6, 3, 7, rng);
    const Standardization st{random_vector(6, rng), random_vector(6, rng, 0.5, 2.0)};
    std::vector<AugmentationMask> reversed = pool.masks();
    std::reverse(reversed.begin(), reversed.end());

    const HyperTabModel a(hn, pool, st);
    const HyperTabModel b(hn, MaskPool(reversed), st);
    const Matrix x = random_matrix(5, 6, rng);
    EXPECT_EQ(a.predict_logits(x), b.predict_logits(x));
    EXPECT_EQ(serialize(a), serialize(b));
}

TEST(Model, PredictionIsTheMeanOfTargetLogits) {
    const auto m = make_model(12);
    Rng rng(13);
    const Matrix x = random_matrix(3, 6, rng);
    const auto per = m.per_target_logits(x);
    ASSERT_EQ(per.size(), m.ensemble_size());
    Matrix mean(3, 3, 0.0);
    for (const auto& p : per)
        for (std::size_t i = 0; i < p.size(); ++i) mean.data()[i] += p.data()[i] / static_cast<double>(per.size());
    const Matrix got = m.predict_logits(x);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got.data()[i], mean.data()[i], 1e-12);
}

TEST(Model, CachedAndUncachedAgree) {
    const auto m = make_model(14);
    Rng rng(15);
    const Matrix x = random_matrix(4, 6, rng);
    const Matrix cached = m.predict_logits(x);
    const Matrix uncached = m.predict_logits_uncached(x);
    for (std::size_t i = 0; i < cached.size(); ++i) EXPECT_NEAR(cached.data()[i], uncached.data()[i], 1e-12);
}

TEST(Model, SingleRowMatchesBatch) {
    const auto m = make_model(16);
    Rng rng(17);
    const Matrix x = random_matrix(3, 6, rng);
    const Matrix batch = m.predict_logits(x);
    const Labels classes = m.predict_classes(x);
    for (std::size_t i = 0; i < 3; ++i) {
        const Vector row = m.predict_logits(x.row(i));
        for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(row[k], batch(i, k), 1e-12);
        EXPECT_EQ(m.predict_class(x.row(i)), classes[i]);
    }
    EXPECT_THROW(m.predict_logits(Matrix(1, 5)), ContractError);
}

TEST(Model, ArgmaxTiesGoToLowestIndex) {
    EXPECT_EQ(argmax(Vector{1.0, 3.0, 3.0}), 1);
    EXPECT_EQ(argmax(Vector{2.0, 2.0}), 0);
    EXPECT_EQ(argmax(Vector{-1.0}), 0);
}

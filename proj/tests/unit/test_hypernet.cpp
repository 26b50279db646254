#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "hypertab/error.hpp"
#include "hypertab/hypernet.hpp"
#include "hypertab/log.hpp"
#include "hypertab/trainer.hpp"

using namespace hypertab;
using namespace hypertab::testing;

namespace {

HyperNetwork small_hn(Rng& rng, std::size_t d = 5, std::size_t l = 3, std::size_t h = 4, std::size_t k = 3) {
    return HyperNetwork::create(d, make_target_spec(l, h, k), {6, 5, 5}, rng);
}

struct QuietWarnings {
    WarningSink previous = set_warning_sink([](std::string_view) {});
    ~QuietWarnings() { set_warning_sink(previous); }
};

}  // namespace

TEST(Hypernet, DefaultShape) {
    Rng rng(1);
    const auto hn = HyperNetwork::create(50, make_target_spec(10, 20, 5), kDefaultHyperHidden, rng);
    EXPECT_EQ(hn.hyper_spec.layer_sizes(), (std::vector<std::size_t>{50, 128, 64, 64, 325}));
    EXPECT_EQ(hn.trainable_parameter_count(), hn.psi.size());
    EXPECT_EQ(hn.feature_count(), 50u);
    EXPECT_EQ(hn.mask_size(), 10u);
    EXPECT_EQ(hn.class_count(), 5u);
}

TEST(Hypernet, LinearTargetSpec) {
    EXPECT_EQ(make_target_spec(4, 0, 3).layer_sizes(), (std::vector<std::size_t>{4, 3}));
}

TEST(Hypernet, InitHasZeroBiasesAndBoundedWeights) {
    Rng rng(2);
    const auto hn = small_hn(rng);
    const auto& spec = hn.hyper_spec;
    for (std::size_t layer = 0; layer < spec.layer_count(); ++layer) {
        const double bound = std::sqrt(1.0 / static_cast<double>(spec.layer_sizes()[layer]));
        for (std::size_t i = spec.weight_offset(layer); i < spec.bias_offset(layer); ++i) {
            EXPECT_LE(std::abs(hn.psi[i]), bound);
        }
        const std::size_t end = spec.bias_offset(layer) + spec.layer_sizes()[layer + 1];
        for (std::size_t i = spec.bias_offset(layer); i < end; ++i) EXPECT_EQ(hn.psi[i], 0.0);
    }
}

TEST(Hypernet, FromPartsValidates) {
    const auto target = make_target_spec(2, 0, 2);  // 6 params
    EXPECT_THROW(HyperNetwork::from_parts(mlp::MlpSpec({4, 5}), Vector(25), target), ContractError);
    EXPECT_THROW(HyperNetwork::from_parts(mlp::MlpSpec({4, 6}), Vector(3), target), ContractError);
    EXPECT_NO_THROW(HyperNetwork::from_parts(mlp::MlpSpec({4, 6}), Vector(30), target));
}

TEST(Hypernet, ZeroPsiGivesZeroTheta) {
    const auto target = make_target_spec(2, 3, 2);
    const mlp::MlpSpec spec({4, 6, 5, 5, target.param_count()});
    const auto hn = HyperNetwork::from_parts(spec, Vector(spec.param_count(), 0.0), target);
    const auto g = generate(hn, AugmentationMask({0, 3}, 4));
    EXPECT_EQ(g.theta, Vector(target.param_count(), 0.0));

    const std::vector<AugmentationMask> masks{AugmentationMask({0, 3}, 4)};
    const auto fwd = ensemble_forward(hn, masks, Matrix{{1, 2, 3, 4}});
    EXPECT_EQ(fwd.logits[0], Matrix(1, 2, 0.0));
}

TEST(Hypernet, GenerateIsMlpForwardOnTheBinaryMask) {
    Rng rng(3);
    const auto hn = small_hn(rng);
    const AugmentationMask m({0, 2, 4}, 5);
    const auto g = generate(hn, m);
    const Matrix direct = mlp::predict(hn.hyper_spec, hn.psi, Matrix(1, 5, m.binary()));
    EXPECT_EQ(g.theta, direct.values());
    EXPECT_EQ(generate(hn, m).theta, g.theta);
}

TEST(Hypernet, GenerateRejectsWrongMaskShape) {
    Rng rng(4);
    const auto hn = small_hn(rng);
    EXPECT_THROW(generate(hn, AugmentationMask({0, 1, 2}, 6)), ContractError);
    EXPECT_THROW(generate(hn, AugmentationMask({0, 1}, 5)), ContractError);
}

TEST(Hypernet, GenerateBatchMatchesSingleCalls) {
    Rng rng(5);
    const auto hn = small_hn(rng);
    const std::vector<AugmentationMask> masks{AugmentationMask({0, 1, 2}, 5), AugmentationMask({1, 3, 4}, 5)};
    const Matrix thetas = generate_batch(hn, masks);
    for (std::size_t j = 0; j < masks.size(); ++j) {
        const auto single = generate(hn, masks[j]).theta;
        for (std::size_t i = 0; i < single.size(); ++i) EXPECT_NEAR(thetas(j, i), single[i], 1e-12);
    }
}

TEST(Hypernet, FullMaskSingleTargetReducesToPlainMlp) {
    Rng rng(6);
    const auto hn = small_hn(rng, 3, 3, 4, 2);
    const AugmentationMask full({0, 1, 2}, 3);
    const Matrix x = random_matrix(4, 3, rng);
    const std::vector<AugmentationMask> masks{full};
    const auto fwd = ensemble_forward(hn, masks, x);
    const Matrix expected = mlp::predict(hn.target_spec, fwd.tape.thetas.row(0), x);
    EXPECT_EQ(fwd.logits[0], expected);
}

TEST(Hypernet, EnsembleForwardMatchesIndependentCalls) {
    Rng rng(7);
    const auto hn = small_hn(rng);
    const Matrix x = random_matrix(3, 5, rng);
    const std::vector<AugmentationMask> masks{AugmentationMask({0, 1, 4}, 5), AugmentationMask({2, 3, 4}, 5)};
    const auto fwd = ensemble_forward(hn, masks, x);
    ASSERT_EQ(fwd.logits.size(), 2u);
    for (std::size_t j = 0; j < masks.size(); ++j) {
        const auto g = generate(hn, masks[j]);
        const Matrix expected = mlp::predict(hn.target_spec, g.theta, apply_mask(x, masks[j]));
        for (std::size_t i = 0; i < expected.size(); ++i) {
            EXPECT_NEAR(fwd.logits[j].data()[i], expected.data()[i], 1e-12);
        }
    }
}

TEST(Hypernet, ZeroUpstreamGivesZeroGradient) {
    Rng rng(8);
    const auto hn = small_hn(rng);
    const std::vector<AugmentationMask> masks{AugmentationMask({0, 1, 4}, 5)};
    const auto fwd = ensemble_forward(hn, masks, random_matrix(2, 5, rng));
    const std::vector<Matrix> up{Matrix(2, 3, 0.0)};
    EXPECT_EQ(ensemble_backward(hn, fwd.tape, up), Vector(hn.psi.size(), 0.0));
}

TEST(Hypernet, LinearTargetClosedForm) {
    // d=3, l=2, K=1 linear target; hypernetwork [3, 3] linear with psi = (W, c).
    // theta = m W + c = (w1, w2, b), logit = w1 x_a + w2 x_b + b.
    // With upstream u: dL/dtheta = (u x_a, u x_b, u), dL/dW = m^T dL/dtheta, dL/dc = dL/dtheta.
    const auto target = make_target_spec(2, 0, 1);
    const mlp::MlpSpec spec({3, 3});
    Vector psi{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.01, 0.02, 0.03};
    const auto hn = HyperNetwork::from_parts(spec, psi, target);
    const AugmentationMask m({0, 2}, 3);
    const Matrix x{{2.0, 5.0, 3.0}};
    const std::vector<AugmentationMask> masks{m};
    const auto fwd = ensemble_forward(hn, masks, x);
    const double u = 1.5;
    const std::vector<Matrix> up{Matrix{{u}}};
    const Vector g = ensemble_backward(hn, fwd.tape, up);
    const Vector dtheta{u * 2.0, u * 3.0, u};
    const Vector expected{dtheta[0], dtheta[1], dtheta[2], 0, 0, 0, dtheta[0], dtheta[1], dtheta[2],
                          dtheta[0], dtheta[1], dtheta[2]};
    ASSERT_EQ(g.size(), expected.size());
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i], expected[i], 1e-15) << i;
}

TEST(Hypernet, EnsembleGradientMatchesFiniteDifferences) {
    QuietWarnings quiet;
    Rng rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        const auto c = random_ensemble_case(rng);
        const Vector analytic = ensemble_loss(c.hn, c.masks, c.x, c.y).grad_psi;
        auto f = [&](const Vector& psi) {
            const auto hn = HyperNetwork::from_parts(c.hn.hyper_spec, psi, c.hn.target_spec);
            return reference_ensemble_loss(hn, c.masks, c.x, c.y);
        };
        const auto cmp = compare(analytic, central_difference(f, c.hn.psi));
        EXPECT_LT(cmp.max_error, 1e-5) << "trial " << trial << " worst coordinate " << cmp.worst;
    }
}

TEST(Hypernet, BackwardIsLinearOverTapeSets) {
    Rng rng(10);
    const auto hn = small_hn(rng);
    const Matrix x = random_matrix(3, 5, rng);
    const std::vector<AugmentationMask> first{AugmentationMask({0, 1, 4}, 5)};
    const std::vector<AugmentationMask> second{AugmentationMask({1, 2, 3}, 5), AugmentationMask({0, 2, 4}, 5)};
    std::vector<AugmentationMask> both = first;
    both.insert(both.end(), second.begin(), second.end());

    const std::vector<Matrix> up_all{random_matrix(3, 3, rng), random_matrix(3, 3, rng), random_matrix(3, 3, rng)};
    const std::vector<Matrix> up_first{up_all[0]};
    const std::vector<Matrix> up_second{up_all[1], up_all[2]};

    const Vector g_all = ensemble_backward(hn, ensemble_forward(hn, both, x).tape, up_all);
    const Vector g1 = ensemble_backward(hn, ensemble_forward(hn, first, x).tape, up_first);
    const Vector g2 = ensemble_backward(hn, ensemble_forward(hn, second, x).tape, up_second);
    for (std::size_t i = 0; i < g_all.size(); ++i) EXPECT_NEAR(g_all[i], g1[i] + g2[i], 1e-12);
}

TEST(Hypernet, BackwardRejectsMismatchedUpstream) {
    Rng rng(11);
    const auto hn = small_hn(rng);
    const std::vector<AugmentationMask> masks{AugmentationMask({0, 1, 4}, 5)};
    const auto fwd = ensemble_forward(hn, masks, random_matrix(2, 5, rng));
    EXPECT_THROW(ensemble_backward(hn, fwd.tape, std::vector<Matrix>{}), ContractError);
    const auto other = small_hn(rng, 6, 3, 4, 3);
    EXPECT_THROW(ensemble_backward(other, fwd.tape, std::vector<Matrix>{Matrix(2, 3)}), ContractError);
}

TEST(Hypernet, ParameterCountIgnoresPoolSize) {
    Rng rng(12);
    const auto hn = HyperNetwork::create(20, make_target_spec(5, 10, 3), kDefaultHyperHidden, rng);
    const std::size_t p = hn.trainable_parameter_count();
    for (std::size_t a : {10u, 50u, 200u}) {
        const auto pool = sample_pool(20, 5, a, rng);
        const std::vector<AugmentationMask> masks = pool.masks();
        const auto fwd = ensemble_forward(hn, masks, random_matrix(2, 20, rng));
        EXPECT_EQ(hn.trainable_parameter_count(), p);
        EXPECT_EQ(fwd.tape.thetas.rows(), a);
    }
}

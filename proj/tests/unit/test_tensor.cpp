#include <gtest/gtest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "hypertab/error.hpp"
#include "hypertab/tensor.hpp"

using namespace hypertab;
using hypertab::testing::central_difference;
using hypertab::testing::compare;
using hypertab::testing::random_matrix;

namespace {

Matrix transpose(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
    return t;
}

void expect_near(const Matrix& a, const Matrix& b, double tol) {
    ASSERT_EQ(a.rows(), b.rows());
    ASSERT_EQ(a.cols(), b.cols());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.data()[i], b.data()[i], tol) << "at " << i;
}

}  // namespace

TEST(Tensor, MatmulSmallExample) {
    const Matrix a{{1, 2}, {3, 4}};
    const Matrix b{{5, 6}, {7, 8}};
    EXPECT_EQ(matmul(a, b), (Matrix{{19, 22}, {43, 50}}));
}

TEST(Tensor, MatmulShapeMismatchThrows) {
    EXPECT_THROW(matmul(Matrix(2, 3), Matrix(2, 3)), ContractError);
    EXPECT_THROW(add(Matrix(2, 3), Matrix(3, 2)), ContractError);
}

TEST(Tensor, RaggedInitializerThrows) { EXPECT_THROW((Matrix{{1, 2}, {3}}), ContractError); }

TEST(Tensor, MatmulIdentityAndDistributivity) {
    Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = random_matrix(3, 4, rng);
        const Matrix b = random_matrix(4, 2, rng);
        const Matrix c = random_matrix(4, 2, rng);
        expect_near(matmul(Matrix::identity(3), a), a, 0.0);
        expect_near(matmul(a, Matrix::identity(4)), a, 0.0);
        expect_near(matmul(a, add(b, c)), add(matmul(a, b), matmul(a, c)), 1e-12);
    }
}

TEST(Tensor, TransposedProductsMatchExplicitTranspose) {
    Rng rng(2);
    const Matrix a = random_matrix(5, 3, rng);
    const Matrix b = random_matrix(5, 4, rng);
    const Matrix c = random_matrix(2, 3, rng);
    expect_near(matmul_at_b(a, b), matmul(transpose(a), b), 1e-12);
    expect_near(matmul_a_bt(a, c), matmul(a, transpose(c)), 1e-12);
}

TEST(Tensor, AffineBroadcastsBias) {
    const Matrix x{{1, 2}, {3, 4}};
    const Matrix w{{1, 0, 1}, {0, 1, 1}};
    const Vector bias{10, 20, 30};
    EXPECT_EQ(affine(x, w, bias), (Matrix{{11, 22, 33}, {13, 24, 37}}));
    EXPECT_THROW(affine(x, w, Vector{1, 2}), ContractError);
}

TEST(Tensor, ColumnSumsAndScale) {
    const Matrix m{{1, 2}, {3, 4}, {5, 6}};
    EXPECT_EQ(column_sums(m), (Vector{9, 12}));
    EXPECT_EQ(scale(m, 2.0), (Matrix{{2, 4}, {6, 8}, {10, 12}}));
}

TEST(Tensor, ReluAndSubgradientAtZero) {
    const Matrix x{{-1, 0, 2}};
    EXPECT_EQ(relu(x), (Matrix{{0, 0, 2}}));
    EXPECT_EQ(relu_backward(x, Matrix{{5, 5, 5}}), (Matrix{{0, 0, 5}}));
}

TEST(Tensor, ReluBackwardMatchesFiniteDifferences) {
    Rng rng(3);
    Matrix x = random_matrix(3, 4, rng);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::abs(x.data()[i]) < 1e-3) x.data()[i] = 0.5;  // keep away from the kink
    }
    const Matrix up = random_matrix(3, 4, rng);
    auto f = [&](const Vector& v) {
        const Matrix r = relu(Matrix(3, 4, v));
        double s = 0;
        for (std::size_t i = 0; i < r.size(); ++i) s += r.data()[i] * up.data()[i];
        return s;
    };
    const auto numeric = central_difference(f, x.values());
    EXPECT_LT(compare(relu_backward(x, up).values(), numeric).max_error, 1e-5);
}

TEST(Tensor, SoftmaxCrossEntropyUniformLogits) {
    const Matrix logits(3, 2, 0.0);
    const auto r = softmax_cross_entropy(logits, Labels{0, 1, 0});
    EXPECT_NEAR(r.loss, std::log(2.0), 1e-15);
}

TEST(Tensor, SoftmaxCrossEntropySaturates) {
    const auto r = softmax_cross_entropy(Matrix{{10, -10}}, Labels{0});
    EXPECT_NEAR(r.loss, 0.0, 1e-8);
    EXPECT_NEAR(r.grad(0, 0), 0.0, 1e-8);
    EXPECT_NEAR(r.grad(0, 1), 0.0, 1e-8);
}

TEST(Tensor, SoftmaxCrossEntropyIsStableForHugeLogits) {
    const auto r = softmax_cross_entropy(Matrix{{1000, -1000, 0}}, Labels{1});
    EXPECT_TRUE(std::isfinite(r.loss));
    EXPECT_NEAR(r.loss, 2000.0, 1e-9);
    EXPECT_TRUE(all_finite(r.grad.values()));
}

TEST(Tensor, SoftmaxCrossEntropyGradientMatchesFiniteDifferences) {
    Rng rng(4);
    const Matrix logits = random_matrix(3, 4, rng, -2.0, 2.0);
    const Labels y{0, 3, 1};
    auto f = [&](const Vector& v) { return softmax_cross_entropy(Matrix(3, 4, v), y).loss; };
    const auto numeric = central_difference(f, logits.values());
    EXPECT_LT(compare(softmax_cross_entropy(logits, y).grad.values(), numeric).max_error, 1e-6);
}

TEST(Tensor, SoftmaxCrossEntropyRejectsBadLabels) {
    EXPECT_THROW(softmax_cross_entropy(Matrix(2, 3), Labels{0, 3}), ContractError);
    EXPECT_THROW(softmax_cross_entropy(Matrix(2, 3), Labels{0}), ContractError);
}

TEST(Tensor, OpsAreBitwiseDeterministic) {
    Rng rng(5);
    const Matrix a = random_matrix(7, 6, rng);
    const Matrix b = random_matrix(6, 5, rng);
    EXPECT_EQ(matmul(a, b), matmul(a, b));
    EXPECT_EQ(matmul_at_b(a, a), matmul_at_b(a, a));
}

TEST(Tensor, AllFinite) {
    EXPECT_TRUE(all_finite(Vector{1.0, -2.0}));
    EXPECT_FALSE(all_finite(Vector{1.0, std::nan("")}));
    EXPECT_FALSE(all_finite(Vector{INFINITY}));
}

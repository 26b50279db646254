#pragma once

// Dense row-major float64 matrices and the handful of kernels the networks
// need. Every reduction runs in a fixed loop order so results are
// bit-reproducible for identical inputs.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace hypertab {

using Vector = std::vector<double>;
using Labels = std::vector<int>;

class Matrix;

/// Non-owning read-only view of a row-major block.
class ConstMatrixView {
public:
    ConstMatrixView() = default;
    ConstMatrixView(const double* data, std::size_t rows, std::size_t cols)
        : data_(data), rows_(rows), cols_(cols) {}
    ConstMatrixView(const Matrix& m);  // NOLINT(google-explicit-constructor)

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return rows_ * cols_; }
    const double* data() const noexcept { return data_; }

    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
    std::span<const double> row(std::size_t r) const noexcept { return {data_ + r * cols_, cols_}; }
    std::span<const double> span() const noexcept { return {data_, size()}; }

private:
    const double* data_ = nullptr;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
};

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, Vector data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix from_view(ConstMatrixView v);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    const Vector& values() const noexcept { return data_; }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    ConstMatrixView view() const noexcept { return {data_.data(), rows_, cols_}; }

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vector data_;
};

inline ConstMatrixView::ConstMatrixView(const Matrix& m) : data_(m.data()), rows_(m.rows()), cols_(m.cols()) {}

/// a * b.
Matrix matmul(ConstMatrixView a, ConstMatrixView b);
/// a^T * b without materializing the transpose.
Matrix matmul_at_b(ConstMatrixView a, ConstMatrixView b);
/// a * b^T without materializing the transpose.
Matrix matmul_a_bt(ConstMatrixView a, ConstMatrixView b);

/// x * w + bias, bias broadcast over rows.
Matrix affine(ConstMatrixView x, ConstMatrixView w, std::span<const double> bias);

Matrix add(ConstMatrixView a, ConstMatrixView b);
Matrix scale(ConstMatrixView a, double factor);
/// Sum over rows; result has one entry per column.
Vector column_sums(ConstMatrixView a);

Matrix relu(ConstMatrixView x);
/// Gradient of relu: upstream where x > 0, zero elsewhere (including x == 0).
Matrix relu_backward(ConstMatrixView x, ConstMatrixView upstream);

struct LossAndGrad {
    double loss = 0.0;
    Matrix grad;
};

/// Mean cross-entropy of softmax(logits) against integer labels, and its
/// gradient (softmax - onehot) / rows.
LossAndGrad softmax_cross_entropy(ConstMatrixView logits, std::span<const int> labels);

bool all_finite(std::span<const double> values);

}  // namespace hypertab

#include "hypertab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hypertab/error.hpp"

namespace hypertab {

namespace {

std::string shape(ConstMatrixView m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(ConstMatrixView a, ConstMatrixView b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ContractError(std::string(op) + ": shape mismatch " + shape(a) + " vs " + shape(b));
    }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, Vector data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ContractError("Matrix: data length " + std::to_string(data_.size()) + " does not match " +
                            std::to_string(rows) + "x" + std::to_string(cols));
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw ContractError("Matrix: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_view(ConstMatrixView v) {
    return Matrix(v.rows(), v.cols(), Vector(v.data(), v.data() + v.size()));
}

Matrix matmul(ConstMatrixView a, ConstMatrixView b) {
    if (a.cols() != b.rows()) throw ContractError("matmul: inner dimensions differ " + shape(a) + " * " + shape(b));
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Matrix out(m, n);
    const double* bp = b.data();
    for (std::size_t i = 0; i < m; ++i) {
        double* orow = out.data() + i * n;
        const double* arow = a.data() + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = arow[p];
            const double* brow = bp + p * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
        }
    }
    return out;
}

Matrix matmul_at_b(ConstMatrixView a, ConstMatrixView b) {
    if (a.rows() != b.rows()) throw ContractError("matmul_at_b: row counts differ " + shape(a) + " vs " + shape(b));
    const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
    Matrix out(m, n);
    for (std::size_t p = 0; p < k; ++p) {
        const double* arow = a.data() + p * m;
        const double* brow = b.data() + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double api = arow[i];
            if (api == 0.0) continue;
            double* orow = out.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += api * brow[j];
        }
    }
    return out;
}

Matrix matmul_a_bt(ConstMatrixView a, ConstMatrixView b) {
    if (a.cols() != b.cols()) throw ContractError("matmul_a_bt: column counts differ " + shape(a) + " vs " + shape(b));
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    Matrix out(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a.data() + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b.data() + j * k;
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            out(i, j) = acc;
        }
    }
    return out;
}

Matrix affine(ConstMatrixView x, ConstMatrixView w, std::span<const double> bias) {
    if (bias.size() != w.cols()) {
        throw ContractError("affine: bias length " + std::to_string(bias.size()) + " vs weight " + shape(w));
    }
    Matrix out = matmul(x, w);
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto r = out.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) r[j] += bias[j];
    }
    return out;
}

Matrix add(ConstMatrixView a, ConstMatrixView b) {
    require_same_shape(a, b, "add");
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
    return out;
}

Matrix scale(ConstMatrixView a, double factor) {
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * factor;
    return out;
}

Vector column_sums(ConstMatrixView a) {
    Vector out(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* r = a.data() + i * a.cols();
        for (std::size_t j = 0; j < a.cols(); ++j) out[j] += r[j];
    }
    return out;
}

Matrix relu(ConstMatrixView x) {
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = std::max(0.0, x.data()[i]);
    return out;
}

Matrix relu_backward(ConstMatrixView x, ConstMatrixView upstream) {
    require_same_shape(x, upstream, "relu_backward");
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = x.data()[i] > 0.0 ? upstream.data()[i] : 0.0;
    return out;
}

LossAndGrad softmax_cross_entropy(ConstMatrixView logits, std::span<const int> labels) {
    if (labels.size() != logits.rows()) {
        throw ContractError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                            std::to_string(logits.rows()) + " rows");
    }
    const std::size_t b = logits.rows(), k = logits.cols();
    LossAndGrad out{0.0, Matrix(b, k)};
    if (b == 0) return out;
    const double inv_b = 1.0 / static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i) {
        const int label = labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= k) {
            throw ContractError("softmax_cross_entropy: label " + std::to_string(label) + " outside [0, " +
                                std::to_string(k) + ")");
        }
        auto z = logits.row(i);
        const double zmax = *std::max_element(z.begin(), z.end());
        double denom = 0.0;
        auto g = out.grad.row(i);
        for (std::size_t j = 0; j < k; ++j) {
            g[j] = std::exp(z[j] - zmax);
            denom += g[j];
        }
        out.loss += std::log(denom) - (z[label] - zmax);
        for (std::size_t j = 0; j < k; ++j) g[j] = g[j] / denom * inv_b;
        g[label] -= inv_b;
    }
    out.loss *= inv_b;
    return out;
}

bool all_finite(std::span<const double> values) {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace hypertab

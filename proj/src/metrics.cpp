#include "hypertab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hypertab/data.hpp"
#include "hypertab/error.hpp"

namespace hypertab {

ConfusionMatrix::ConfusionMatrix(std::span<const int> y_true, std::span<const int> y_pred, std::size_t classes)
    : k_(classes), counts_(classes * classes, 0) {
    if (y_true.size() != y_pred.size()) throw ContractError("ConfusionMatrix: label vectors differ in length");
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i], p = y_pred[i];
        if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= k_ || static_cast<std::size_t>(p) >= k_) {
            throw ContractError("ConfusionMatrix: label outside [0, " + std::to_string(k_) + ")");
        }
        ++counts_[static_cast<std::size_t>(t) * k_ + static_cast<std::size_t>(p)];
        ++total_;
    }
}

std::uint64_t ConfusionMatrix::support(std::size_t truth) const noexcept {
    std::uint64_t s = 0;
    for (std::size_t p = 0; p < k_; ++p) s += counts_[truth * k_ + p];
    return s;
}

namespace {

void require_labels(std::span<const int> y_true, std::span<const int> y_pred) {
    if (y_true.empty()) throw ContractError("metric: no samples");
    if (y_true.size() != y_pred.size()) throw ContractError("metric: y_true and y_pred differ in length");
}

std::size_t class_bound(std::span<const int> a, std::span<const int> b) {
    int m = 0;
    for (int v : a) m = std::max(m, v);
    for (int v : b) m = std::max(m, v);
    return static_cast<std::size_t>(m) + 1;
}

}  // namespace

double balanced_accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
    require_labels(y_true, y_pred);
    const ConfusionMatrix cm(y_true, y_pred, class_bound(y_true, y_pred));
    double recall_sum = 0.0;
    std::size_t present = 0;
    std::uint64_t hits = 0;
    std::uint64_t common_support = 0;
    bool equal_supports = true;
    for (std::size_t c = 0; c < cm.classes(); ++c) {
        const auto s = cm.support(c);
        if (s == 0) continue;
        recall_sum += static_cast<double>(cm(c, c)) / static_cast<double>(s);
        hits += cm(c, c);
        if (common_support == 0) common_support = s;
        equal_supports = equal_supports && s == common_support;
        ++present;
    }
    // Equal supports: the mean recall is hits / n, computed with a single rounding
    // so it agrees bit for bit with accuracy().
    if (equal_supports) return static_cast<double>(hits) / static_cast<double>(common_support * present);
    return recall_sum / static_cast<double>(present);
}

double accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
    require_labels(y_true, y_pred);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) hits += y_true[i] == y_pred[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(y_true.size());
}

void ScoreTable::validate() const {
    if (scores.rows() != methods.size() || scores.cols() != datasets.size()) {
        throw ContractError("ScoreTable: score matrix is " + std::to_string(scores.rows()) + "x" +
                            std::to_string(scores.cols()) + " for " + std::to_string(methods.size()) +
                            " methods and " + std::to_string(datasets.size()) + " datasets");
    }
    if (!all_finite(scores.values())) throw ContractError("ScoreTable: non-finite score");
}

Vector mean_ranks(const ScoreTable& table) {
    table.validate();
    const std::size_t m = table.methods.size(), nd = table.datasets.size();
    if (m < 2) throw ContractError("mean_ranks: need at least two methods");
    if (nd == 0) throw ContractError("mean_ranks: need at least one dataset");
    Vector rank_sum(m, 0.0);
    std::vector<std::size_t> order(m);
    for (std::size_t d = 0; d < nd; ++d) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return table.scores(a, d) > table.scores(b, d); });
        for (std::size_t i = 0; i < m;) {
            std::size_t j = i;
            while (j + 1 < m && table.scores(order[j + 1], d) == table.scores(order[i], d)) ++j;
            // positions i..j (0-based) share rank mean(i+1 .. j+1)
            const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
            for (std::size_t t = i; t <= j; ++t) rank_sum[order[t]] += rank;
            i = j + 1;
        }
    }
    for (auto& r : rank_sum) r /= static_cast<double>(nd);
    return rank_sum;
}

ScoreTable parse_score_table(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw DataError("score table: empty input");
    auto header = split_csv_record(line);
    if (header.size() < 2) throw DataError("score table: header needs a dataset column and at least one method");
    ScoreTable t;
    t.methods.assign(header.begin() + 1, header.end());
    std::vector<Vector> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_record(line);
        if (fields.size() != header.size()) {
            throw DataError("score table line " + std::to_string(lineno) + ": expected " +
                            std::to_string(header.size()) + " fields");
        }
        t.datasets.push_back(fields[0]);
        Vector r;
        for (std::size_t i = 1; i < fields.size(); ++i) {
            try {
                std::size_t used = 0;
                r.push_back(std::stod(fields[i], &used));
                if (used != fields[i].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw DataError("score table line " + std::to_string(lineno) + ": '" + fields[i] + "' is not a number");
            }
        }
        rows.push_back(std::move(r));
    }
    t.scores = Matrix(t.methods.size(), t.datasets.size());
    for (std::size_t d = 0; d < rows.size(); ++d) {
        for (std::size_t m = 0; m < t.methods.size(); ++m) t.scores(m, d) = rows[d][m];
    }
    t.validate();
    return t;
}

ScoreTable read_score_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_score_table(buf.str());
}

std::string format_score_table(const ScoreTable& table) {
    table.validate();
    std::ostringstream out;
    out.precision(17);
    out << "dataset";
    for (const auto& m : table.methods) out << ',' << quote_csv_field(m);
    out << '\n';
    for (std::size_t d = 0; d < table.datasets.size(); ++d) {
        out << quote_csv_field(table.datasets[d]);
        for (std::size_t m = 0; m < table.methods.size(); ++m) out << ',' << table.scores(m, d);
        out << '\n';
    }
    return out.str();
}

void write_score_table(const ScoreTable& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << format_score_table(table);
}

MeanStd mean_std(std::span<const double> values) {
    if (values.empty()) throw ContractError("mean_std: no values");
    MeanStd out;
    for (double v : values) out.mean += v;
    out.mean /= static_cast<double>(values.size());
    const bool constant = std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); });
    if (constant) {
        out.mean = values.front();
    } else if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return out;
}

std::string format_mean_std(const MeanStd& ms) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f (%.2f)", 100.0 * ms.mean, 100.0 * ms.stddev);
    return buf;
}

}  // namespace hypertab

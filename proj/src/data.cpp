#include "hypertab/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "hypertab/error.hpp"
#include "hypertab/log.hpp"

namespace hypertab {

namespace {

std::atomic<std::uint64_t> fit_rows_counter{0};

struct Record {
    std::vector<std::string> fields;
    std::size_t line = 0;  // 1-based line where the record starts
};

// RFC-4180 reader: quoted fields may contain separators, doubled quotes and newlines.
std::vector<Record> read_records(const std::string& text) {
    std::vector<Record> records;
    Record current;
    std::string field;
    std::size_t line = 1;
    current.line = 1;
    bool in_quotes = false;
    bool record_has_content = false;
    const std::size_t n = text.size();
    for (std::size_t i = 0; i < n; ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < n && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        if (c == '"') {
            in_quotes = true;
            record_has_content = true;
        } else if (c == ',') {
            current.fields.push_back(std::move(field));
            field.clear();
            record_has_content = true;
        } else if (c == '\r') {
            // tolerate CRLF
        } else if (c == '\n') {
            if (record_has_content || !field.empty()) {
                current.fields.push_back(std::move(field));
                records.push_back(std::move(current));
            }
            field.clear();
            current = Record{};
            record_has_content = false;
            ++line;
            current.line = line;
        } else {
            field += c;
            record_has_content = true;
        }
    }
    if (in_quotes) throw DataError("csv: unterminated quoted field starting near line " + std::to_string(current.line));
    if (record_has_content || !field.empty()) {
        current.fields.push_back(std::move(field));
        records.push_back(std::move(current));
    }
    return records;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::optional<double> parse_double(const std::string& raw) {
    const std::string s = trim(raw);
    if (s.empty()) return std::nullopt;
    const char* begin = s.data();
    if (*begin == '+') ++begin;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
    return value;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

LabelColumn LabelColumn::parse(const std::string& text) {
    if (text.empty() || text == "last") return last();
    if (text == "none") return none();
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isdigit(c); })) {
        return at(std::stoull(text));
    }
    return named(text);
}

std::vector<std::string> split_csv_record(const std::string& line) {
    auto records = read_records(line);
    if (records.empty()) return {};
    return records.front().fields;
}

std::string quote_csv_field(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

Dataset parse_csv(const std::string& text, const LabelColumn& label, bool has_header) {
    auto records = read_records(text);
    if (records.empty()) throw DataError("csv: file is empty");
    const std::size_t width = records.front().fields.size();
    if (!label.absent && width < 2) throw DataError("csv: need at least one feature column and a label column");

    std::vector<std::string> header;
    std::size_t first_row = 0;
    if (has_header) {
        header = records.front().fields;
        for (auto& h : header) h = trim(h);
        first_row = 1;
    }

    std::size_t label_idx = width - 1;
    if (label.absent) {
        label_idx = width;  // matches no column
    } else if (label.name) {
        if (!has_header) throw DataError("csv: label column given by name but the file has no header");
        auto it = std::find(header.begin(), header.end(), *label.name);
        if (it == header.end()) throw DataError("csv: label column '" + *label.name + "' not found in header");
        label_idx = static_cast<std::size_t>(it - header.begin());
    } else if (label.index) {
        if (*label.index >= width) {
            throw DataError("csv: label column index " + std::to_string(*label.index) + " but rows have " +
                            std::to_string(width) + " fields");
        }
        label_idx = *label.index;
    }

    const std::size_t n = records.size() - first_row;
    if (n == 0) throw DataError("csv: no data rows");
    const std::size_t d = label.absent ? width : width - 1;

    Dataset ds;
    ds.x = Matrix(n, d);
    ds.y.reserve(n);
    std::map<std::string, int> class_index;
    for (std::size_t r = 0; r < n; ++r) {
        const auto& rec = records[first_row + r];
        if (rec.fields.size() != width) {
            throw DataError("csv line " + std::to_string(rec.line) + ": expected " + std::to_string(width) +
                            " fields, found " + std::to_string(rec.fields.size()));
        }
        std::size_t col = 0;
        for (std::size_t f = 0; f < width; ++f) {
            if (f == label_idx) continue;
            auto v = parse_double(rec.fields[f]);
            if (!v) {
                throw DataError("csv line " + std::to_string(rec.line) + ", column " + std::to_string(f + 1) +
                                ": '" + rec.fields[f] + "' is not a finite number");
            }
            ds.x(r, col++) = *v;
        }
        if (label.absent) continue;
        const std::string cls = trim(rec.fields[label_idx]);
        if (cls.empty()) throw DataError("csv line " + std::to_string(rec.line) + ": missing label");
        auto [it, inserted] = class_index.try_emplace(cls, static_cast<int>(ds.class_names.size()));
        if (inserted) ds.class_names.push_back(cls);
        ds.y.push_back(it->second);
    }

    for (std::size_t f = 0; f < width; ++f) {
        if (f == label_idx) continue;
        ds.feature_names.push_back(has_header ? header[f] : "f" + std::to_string(ds.feature_names.size()));
    }
    return ds;
}

Dataset load_csv(const std::filesystem::path& path, const LabelColumn& label, bool has_header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_csv(buf.str(), label, has_header);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string to_csv(const Dataset& ds) {
    std::string out;
    for (std::size_t j = 0; j < ds.features(); ++j) {
        out += quote_csv_field(j < ds.feature_names.size() ? ds.feature_names[j] : "f" + std::to_string(j));
        out += ',';
    }
    out += "label\n";
    for (std::size_t i = 0; i < ds.samples(); ++i) {
        for (std::size_t j = 0; j < ds.features(); ++j) {
            out += format_double(ds.x(i, j));
            out += ',';
        }
        out += quote_csv_field(ds.class_names.at(static_cast<std::size_t>(ds.y[i])));
        out += '\n';
    }
    return out;
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << to_csv(ds);
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> rows) {
    Dataset out;
    out.x = Matrix(rows.size(), ds.features());
    out.y.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= ds.samples()) throw ContractError("subset: row index out of range");
        auto src = ds.x.row(rows[i]);
        std::copy(src.begin(), src.end(), out.x.row(i).begin());
        out.y.push_back(ds.y[rows[i]]);
    }
    out.feature_names = ds.feature_names;
    out.class_names = ds.class_names;
    return out;
}

Standardization standardize_fit(ConstMatrixView x) {
    if (x.rows() < 2) throw ContractError("standardize_fit: need at least two rows");
    fit_rows_counter.fetch_add(x.rows(), std::memory_order_relaxed);
    const std::size_t n = x.rows(), d = x.cols();
    Standardization st{Vector(d, 0.0), Vector(d, 0.0)};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) st.mean[j] += x(i, j);
    }
    for (auto& m : st.mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = x(i, j) - st.mean[j];
            st.stddev[j] += diff * diff;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        const double sd = std::sqrt(st.stddev[j] / static_cast<double>(n));
        // A constant column can leave rounding residue of a few ulps.
        st.stddev[j] = sd > 1e-12 * std::max(1.0, std::abs(st.mean[j])) ? sd : 1.0;
    }
    return st;
}

Matrix standardize_apply(ConstMatrixView x, const Standardization& st) {
    if (x.cols() != st.features()) throw ContractError("standardize_apply: feature count mismatch");
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = (x(i, j) - st.mean[j]) / st.stddev[j];
    }
    return out;
}

Vector standardize_apply(std::span<const double> x, const Standardization& st) {
    return standardize_apply(ConstMatrixView(x.data(), 1, x.size()), st).values();
}

std::uint64_t standardize_fit_rows_seen() noexcept { return fit_rows_counter.load(std::memory_order_relaxed); }

std::vector<std::size_t> SplitPlan::test_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
        if (fold_of[i] == fold) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> SplitPlan::train_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
        if (fold_of[i] != fold) out.push_back(i);
    }
    return out;
}

SplitPlan stratified_kfold(std::span<const int> labels, std::size_t folds, std::uint64_t seed) {
    const std::size_t n = labels.size();
    if (folds < 2) throw ContractError("stratified_kfold: need at least 2 folds");
    if (folds > n) {
        throw ContractError("stratified_kfold: " + std::to_string(folds) + " folds for " + std::to_string(n) +
                            " samples");
    }
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[labels[i]].push_back(i);

    SplitPlan plan{folds, seed, std::vector<std::size_t>(n, 0)};
    std::mt19937_64 rng(seed);
    // Continuing the deal position across classes keeps fold sizes within one of each other.
    std::size_t next = 0;
    for (auto& [cls, members] : by_class) {
        if (members.size() < folds) {
            warn("stratified_kfold: class " + std::to_string(cls) + " has " + std::to_string(members.size()) +
                 " members, fewer than " + std::to_string(folds) + " folds");
        }
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t idx : members) {
            plan.fold_of[idx] = next;
            next = (next + 1) % folds;
        }
    }
    return plan;
}

SyntheticDataset make_synthetic(std::uint64_t seed) {
    constexpr std::size_t kSamples = 50, kFeatures = 50, kClasses = 5;
    std::mt19937_64 rng(seed);
    SyntheticDataset out;
    out.informative_column = std::uniform_int_distribution<std::size_t>(0, kFeatures - 1)(rng);
    std::uniform_real_distribution<double> noise(0.0, 1.0);
    Dataset& ds = out.data;
    ds.x = Matrix(kSamples, kFeatures);
    ds.y.resize(kSamples);
    for (std::size_t i = 0; i < kSamples; ++i) {
        const int cls = static_cast<int>(i % kClasses);
        ds.y[i] = cls;
        for (std::size_t j = 0; j < kFeatures; ++j) {
            ds.x(i, j) = j == out.informative_column ? static_cast<double>(cls) / 4.0 : noise(rng);
        }
    }
    for (std::size_t j = 0; j < kFeatures; ++j) ds.feature_names.push_back("x" + std::to_string(j));
    for (std::size_t c = 0; c < kClasses; ++c) ds.class_names.push_back(std::to_string(c));
    return out;
}

std::string fnv1a_hex(std::span<const unsigned char> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_checksum(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fnv1a_hex(bytes);
}

DatasetManifest describe_dataset(const std::string& name, const std::filesystem::path& path,
                                 const std::string& label_column, const Dataset& ds) {
    return DatasetManifest{name,          path.string(), label_column,        ds.samples(),
                           ds.features(), ds.classes(),  file_checksum(path)};
}

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
    nlohmann::json j = {{"name", m.name},         {"path", m.path},         {"label_column", m.label_column},
                        {"n", m.samples},         {"d", m.features},        {"k", m.classes},
                        {"checksum", m.checksum}, {"checksum_algorithm", "fnv1a-64"}};
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    try {
        auto j = nlohmann::json::parse(in);
        return DatasetManifest{j.at("name"), j.at("path"), j.at("label_column"), j.at("n"),
                               j.at("d"),    j.at("k"),    j.at("checksum")};
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

}  // namespace hypertab

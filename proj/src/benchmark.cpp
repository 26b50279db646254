#include "hypertab/benchmark.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hypertab/error.hpp"
#include "hypertab/log.hpp"
#include "json_params.hpp"

namespace hypertab {

namespace {

using detail::Json;

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
}

BenchmarkDataset parse_dataset(const Json& j, std::size_t i) {
    const std::string where = "datasets[" + std::to_string(i) + "]";
    detail::check_keys(j,
                       {"name", "title", "path", "label_column", "source", "checksum", "reference", "baselines",
                        "params", "grid"},
                       where);
    auto field = [&](const char* k) { return where + "." + k; };
    BenchmarkDataset d;
    if (!j.contains("name")) throw ConfigError(field("name"), "required");
    if (!j.contains("path")) throw ConfigError(field("path"), "required");
    d.name = detail::as_string(j["name"], field("name"));
    d.path = detail::as_string(j["path"], field("path"));
    d.title = j.contains("title") ? detail::as_string(j["title"], field("title")) : d.name;
    if (j.contains("label_column")) d.label_column = detail::as_string(j["label_column"], field("label_column"));
    if (j.contains("source")) d.source = detail::as_string(j["source"], field("source"));
    if (j.contains("checksum")) d.checksum = detail::as_string(j["checksum"], field("checksum"));
    if (!j.contains("reference")) throw ConfigError(field("reference"), "required");
    const Json& ref = j["reference"];
    detail::check_keys(ref, {"mean", "std", "note"}, field("reference"));
    if (!ref.contains("mean") || !ref.contains("std")) throw ConfigError(field("reference"), "needs mean and std");
    d.reference_mean = detail::as_number(ref["mean"], field("reference.mean"));
    d.reference_std = detail::as_number(ref["std"], field("reference.std"));
    if (ref.contains("note")) d.reference_note = detail::as_string(ref["note"], field("reference.note"));
    if (j.contains("baselines")) {
        if (!j["baselines"].is_object()) throw ConfigError(field("baselines"), "expected an object");
        for (const auto& [method, score] : j["baselines"].items()) {
            d.baselines[method] = detail::as_number(score, field("baselines") + "." + method);
        }
    }
    if (j.contains("params")) {
        detail::check_keys(j["params"], detail::param_keys(), field("params"));
        detail::read_params(j["params"], d.params, field("params"));
    }
    d.grid.masks_no = {d.params.masks_no};
    d.grid.mask_size = {d.params.mask_size};
    d.grid.target_size = {d.params.target_size};
    d.grid.learning_rate = {d.params.train.learning_rate};
    if (j.contains("grid")) {
        GridSpec g = detail::read_grid(j["grid"], field("grid"));
        if (!g.masks_no.empty()) d.grid.masks_no = g.masks_no;
        if (!g.mask_size.empty()) d.grid.mask_size = g.mask_size;
        if (!g.target_size.empty()) d.grid.target_size = g.target_size;
        if (!g.learning_rate.empty()) d.grid.learning_rate = g.learning_rate;
        d.grid.budget = g.budget;
        d.grid.seed = g.seed;
    }
    return d;
}

std::filesystem::path resolve(const BenchmarkManifest& m, const BenchmarkDataset& d) {
    std::filesystem::path p(d.path);
    return p.is_absolute() ? p : m.root / p;
}

bool selected(const BenchmarkOptions& opt, const std::string& name) {
    return opt.only.empty() || std::find(opt.only.begin(), opt.only.end(), name) != opt.only.end();
}

BenchmarkEntry base_entry(const BenchmarkDataset& d) {
    BenchmarkEntry e;
    e.name = d.name;
    e.title = d.title;
    e.reference_mean = d.reference_mean;
    e.reference_std = d.reference_std;
    e.band = d.band();
    return e;
}

BenchmarkEntry scored_entry(const BenchmarkDataset& d, const GridPoint& point, std::vector<FoldScore> scores) {
    BenchmarkEntry e = base_entry(d);
    e.point = point;
    e.scores = std::move(scores);
    e.score = summarize_scores(e.scores);
    e.status = 100.0 * e.score.mean >= e.band ? BenchmarkStatus::Passed : BenchmarkStatus::Failed;
    return e;
}

void finish_ranks(const BenchmarkManifest& m, BenchmarkReport& report) {
    std::vector<const BenchmarkDataset*> used;
    std::vector<const BenchmarkEntry*> entries;
    for (const auto& e : report.entries) {
        if (!e.evaluated()) continue;
        auto it = std::find_if(m.datasets.begin(), m.datasets.end(), [&](const auto& d) { return d.name == e.name; });
        used.push_back(&*it);
        entries.push_back(&e);
    }
    if (used.empty()) return;
    std::vector<std::string> methods;
    for (const auto& [method, score] : used.front()->baselines) {
        const bool everywhere =
            std::all_of(used.begin(), used.end(), [&](const auto* d) { return d->baselines.count(method) > 0; });
        if (everywhere && method != m.method) methods.push_back(method);
    }
    if (methods.empty()) return;
    methods.push_back(m.method);

    ScoreTable table;
    table.methods = methods;
    table.scores = Matrix(methods.size(), used.size());
    for (std::size_t c = 0; c < used.size(); ++c) {
        table.datasets.push_back(used[c]->name);
        for (std::size_t r = 0; r + 1 < methods.size(); ++r) table.scores(r, c) = used[c]->baselines.at(methods[r]);
        table.scores(methods.size() - 1, c) = 100.0 * entries[c]->score.mean;
    }
    report.rank_methods = methods;
    report.mean_ranks = mean_ranks(table);
}

Json status_json(const BenchmarkEntry& e) {
    Json j{{"status", to_string(e.status)}, {"note", e.note}};
    if (e.point) j["point"] = detail::grid_point_to_json(*e.point);
    return j;
}

void write_cache(const std::filesystem::path& dir, const BenchmarkEntry& e) {
    std::filesystem::create_directories(dir);
    write_text(dir / "selected.json", status_json(e).dump(2) + "\n");
    if (e.evaluated()) write_text(dir / "fold_scores.csv", format_fold_scores(e.scores));
}

}  // namespace

const char* to_string(BenchmarkStatus s) {
    switch (s) {
        case BenchmarkStatus::Passed: return "pass";
        case BenchmarkStatus::Failed: return "fail";
        case BenchmarkStatus::Missing: return "missing";
        case BenchmarkStatus::ChecksumMismatch: return "checksum-mismatch";
    }
    return "unknown";
}

BenchmarkManifest parse_benchmark_manifest(const std::string& json_text, const std::filesystem::path& root) {
    Json j;
    try {
        j = Json::parse(json_text);
    } catch (const Json::parse_error& e) {
        throw ConfigError("manifest", std::string("invalid JSON: ") + e.what());
    }
    detail::check_keys(j, {"method", "folds", "seeds", "grid_seeds", "datasets"}, "");
    BenchmarkManifest m;
    m.root = root;
    if (j.contains("method")) m.method = detail::as_string(j["method"], "method");
    if (j.contains("folds")) m.folds = detail::as_count(j["folds"], "folds");
    if (j.contains("seeds")) m.seeds = detail::as_seeds(j["seeds"], "seeds");
    if (j.contains("grid_seeds")) m.grid_seeds = detail::as_seeds(j["grid_seeds"], "grid_seeds");
    if (m.seeds.empty()) throw ConfigError("seeds", "must not be empty");
    if (m.grid_seeds.empty()) throw ConfigError("grid_seeds", "must not be empty");
    if (j.contains("datasets")) {
        if (!j["datasets"].is_array()) throw ConfigError("datasets", "expected an array");
        for (std::size_t i = 0; i < j["datasets"].size(); ++i) m.datasets.push_back(parse_dataset(j["datasets"][i], i));
    }
    return m;
}

BenchmarkManifest read_benchmark_manifest(const std::filesystem::path& path) {
    return parse_benchmark_manifest(read_text(path), path.parent_path());
}

std::string format_fold_scores(const std::vector<FoldScore>& scores) {
    std::string out = "seed,fold,balanced_accuracy\n";
    for (const auto& s : scores) {
        out += std::to_string(s.seed) + ',' + std::to_string(s.fold) + ',' + fmt17(s.balanced_accuracy) + '\n';
    }
    return out;
}

std::vector<FoldScore> parse_fold_scores(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "seed,fold,balanced_accuracy") {
        throw DataError("fold scores: unexpected header");
    }
    std::vector<FoldScore> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_record(line);
        if (fields.size() != 3) throw DataError("fold scores: malformed line '" + line + "'");
        try {
            out.push_back({std::stoull(fields[0]), std::stoull(fields[1]), std::stod(fields[2])});
        } catch (const std::exception&) {
            throw DataError("fold scores: malformed line '" + line + "'");
        }
    }
    return out;
}

BenchmarkReport run_benchmark(const BenchmarkManifest& manifest, const BenchmarkOptions& options) {
    BenchmarkReport report;
    for (const auto& d : manifest.datasets) {
        if (!selected(options, d.name)) continue;
        const auto path = resolve(manifest, d);
        const auto cache = options.cache_dir / d.name;
        BenchmarkEntry entry = base_entry(d);
        if (!std::filesystem::exists(path)) {
            entry.note = "dataset file not found: " + path.string();
            warn("benchmark: skipping " + d.name + " (" + entry.note + ")");
            write_cache(cache, entry);
            report.entries.push_back(std::move(entry));
            continue;
        }
        if (!d.checksum.empty()) {
            const std::string actual = file_checksum(path);
            if (actual != d.checksum) {
                entry.status = BenchmarkStatus::ChecksumMismatch;
                entry.note = "checksum " + actual + ", manifest expects " + d.checksum;
                warn("benchmark: skipping " + d.name + " (" + entry.note + ")");
                write_cache(cache, entry);
                report.entries.push_back(std::move(entry));
                continue;
            }
        }
        const Dataset ds = load_csv(path, LabelColumn::parse(d.label_column));
        GridSpec grid = d.grid;
        if (options.budget) grid.budget = *options.budget;
        const auto search = grid_search(ds, d.params, grid, manifest.folds, manifest.grid_seeds);
        const GridPoint best = search.results[search.best].point;
        auto cv = cross_validate(ds, with_point(d.params, best), manifest.folds, manifest.seeds);

        entry = scored_entry(d, best, std::move(cv.scores));
        std::filesystem::create_directories(cache);
        write_text(cache / "grid_results.csv", format_grid_results(search));
        write_cache(cache, entry);
        report.entries.push_back(std::move(entry));
    }
    finish_ranks(manifest, report);
    return report;
}

BenchmarkReport summarize_benchmark(const BenchmarkManifest& manifest, const BenchmarkOptions& options) {
    BenchmarkReport report;
    for (const auto& d : manifest.datasets) {
        if (!selected(options, d.name)) continue;
        const auto cache = options.cache_dir / d.name;
        BenchmarkEntry entry = base_entry(d);
        if (!std::filesystem::exists(cache / "selected.json")) {
            entry.note = "no cached results in " + cache.string();
            report.entries.push_back(std::move(entry));
            continue;
        }
        const Json status = Json::parse(read_text(cache / "selected.json"));
        const std::string s = status.at("status").get<std::string>();
        if (s == "pass" || s == "fail") {
            const Json& p = status.at("point");
            const GridPoint point{p.at("masks_no").get<std::size_t>(), p.at("mask_size").get<std::size_t>(),
                                  p.at("target_size").get<std::size_t>(), p.at("learning_rate").get<double>()};
            entry = scored_entry(d, point, parse_fold_scores(read_text(cache / "fold_scores.csv")));
        } else {
            entry.status = s == "checksum-mismatch" ? BenchmarkStatus::ChecksumMismatch : BenchmarkStatus::Missing;
            entry.note = status.at("note").get<std::string>();
        }
        report.entries.push_back(std::move(entry));
    }
    finish_ranks(manifest, report);
    return report;
}

std::string format_benchmark_csv(const BenchmarkReport& report) {
    std::ostringstream out;
    out << "dataset,status,mean_balanced_accuracy,std_balanced_accuracy,reference_mean,reference_std,band,"
           "masks_no,mask_size,target_size,learning_rate,runs,note\n";
    for (const auto& e : report.entries) {
        out << quote_csv_field(e.name) << ',' << to_string(e.status) << ',';
        if (e.evaluated()) {
            out << fmt17(100.0 * e.score.mean) << ',' << fmt17(100.0 * e.score.stddev);
        } else {
            out << ',';
        }
        out << ',' << fmt17(e.reference_mean) << ',' << fmt17(e.reference_std) << ',' << fmt17(e.band) << ',';
        if (e.point) {
            out << e.point->masks_no << ',' << e.point->mask_size << ',' << e.point->target_size << ','
                << fmt17(e.point->learning_rate);
        } else {
            out << ",,,";
        }
        out << ',' << e.scores.size() << ',' << quote_csv_field(e.note) << '\n';
    }
    return out.str();
}

std::string format_benchmark_text(const BenchmarkReport& report) {
    std::ostringstream out;
    char line[256];
    for (const auto& e : report.entries) {
        if (e.evaluated()) {
            std::snprintf(line, sizeof(line), "%-16s %-7s %s  band >= %.2f  (reference %.2f (%.2f))\n",
                          e.title.c_str(), to_string(e.status), format_mean_std(e.score).c_str(), e.band,
                          e.reference_mean, e.reference_std);
        } else {
            std::snprintf(line, sizeof(line), "%-16s %-7s %s\n", e.title.c_str(), to_string(e.status),
                          e.note.c_str());
        }
        out << line;
    }
    if (!report.mean_ranks.empty()) {
        out << "mean rank:";
        for (std::size_t i = 0; i < report.rank_methods.size(); ++i) {
            std::snprintf(line, sizeof(line), " %s %.2f", report.rank_methods[i].c_str(), report.mean_ranks[i]);
            out << line << (i + 1 < report.rank_methods.size() ? "," : "");
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace hypertab

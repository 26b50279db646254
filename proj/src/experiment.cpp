#include "hypertab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "hypertab/error.hpp"

namespace hypertab {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t run_seed(std::uint64_t cv_seed, std::size_t fold) {
    return splitmix64(splitmix64(cv_seed) ^ static_cast<std::uint64_t>(fold));
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

MeanStd summarize_scores(std::span<const FoldScore> scores) {
    if (scores.empty()) throw ContractError("summarize_scores: no scores");
    Vector all;
    std::vector<std::uint64_t> seed_order;
    std::vector<Vector> per_seed;
    for (const auto& s : scores) {
        all.push_back(s.balanced_accuracy);
        auto it = std::find(seed_order.begin(), seed_order.end(), s.seed);
        if (it == seed_order.end()) {
            seed_order.push_back(s.seed);
            per_seed.emplace_back();
            it = seed_order.end() - 1;
        }
        per_seed[static_cast<std::size_t>(it - seed_order.begin())].push_back(s.balanced_accuracy);
    }
    MeanStd out = mean_std(all);
    if (per_seed.size() > 1) {
        Vector run_means;
        for (const auto& v : per_seed) run_means.push_back(mean_std(v).mean);
        out.stddev = mean_std(run_means).stddev;
    }
    return out;
}

CvReport cross_validate(const Dataset& ds, const HyperTabParams& params, std::size_t folds,
                        std::span<const std::uint64_t> seeds) {
    if (seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
    params.validate(ds.features());
    CvReport report;
    for (std::uint64_t seed : seeds) {
        const SplitPlan plan = stratified_kfold(ds.y, folds, seed);
        for (std::size_t f = 0; f < folds; ++f) {
            const auto train_rows = plan.train_indices(f);
            const auto test_rows = plan.test_indices(f);
            Dataset train_set = subset(ds, train_rows);
            const Dataset test_set = subset(ds, test_rows);
            HyperTabParams p = params;
            p.train.seed = run_seed(seed, f);
            p.train.trace_path.reset();
            auto result = fit(train_set, p);
            const Labels predicted = result.model.predict_classes(test_set.x);
            report.scores.push_back({seed, f, balanced_accuracy(test_set.y, predicted)});
        }
    }
    report.summary = summarize_scores(report.scores);
    return report;
}

void GridSpec::validate(std::size_t feature_count) const {
    if (masks_no.empty()) throw ConfigError("grid.masks_no", "must not be empty");
    if (mask_size.empty()) throw ConfigError("grid.mask_size", "must not be empty");
    if (target_size.empty()) throw ConfigError("grid.target_size", "must not be empty");
    if (learning_rate.empty()) throw ConfigError("grid.learning_rate", "must not be empty");
    if (budget < 1) throw ConfigError("grid.budget", "must be >= 1");
    for (auto m : masks_no) {
        if (m < 1) throw ConfigError("grid.masks_no", "values must be >= 1");
    }
    for (auto l : mask_size) {
        if (l < 1 || l > feature_count) {
            throw ConfigError("grid.mask_size", "values must lie in [1, " + std::to_string(feature_count) + "]");
        }
    }
    for (double lr : learning_rate) {
        if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("grid.learning_rate", "values must be positive");
    }
}

std::vector<GridPoint> grid_points(const GridSpec& spec) {
    std::vector<GridPoint> all;
    for (auto m : spec.masks_no) {
        for (auto l : spec.mask_size) {
            for (auto t : spec.target_size) {
                for (double lr : spec.learning_rate) all.push_back({m, l, t, lr});
            }
        }
    }
    if (all.size() <= spec.budget) return all;
    std::vector<std::size_t> idx(all.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(spec.seed);
    for (std::size_t i = 0; i < spec.budget; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(spec.budget);
    std::sort(idx.begin(), idx.end());
    std::vector<GridPoint> chosen;
    chosen.reserve(idx.size());
    for (auto i : idx) chosen.push_back(all[i]);
    return chosen;
}

HyperTabParams with_point(HyperTabParams base, const GridPoint& p) {
    base.masks_no = p.masks_no;
    base.mask_size = p.mask_size;
    base.target_size = p.target_size;
    base.train.learning_rate = p.learning_rate;
    return base;
}

std::size_t select_best(std::span<const GridResult> results) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        if (r.diverged) continue;
        if (!best) {
            best = i;
            continue;
        }
        const auto& b = results[*best];
        const bool better = r.score.mean > b.score.mean ||
                            (r.score.mean == b.score.mean &&
                             (r.point.target_size < b.point.target_size ||
                              (r.point.target_size == b.point.target_size && r.point.masks_no < b.point.masks_no)));
        if (better) best = i;
    }
    if (!best) throw DivergenceError("grid search: every evaluated point diverged");
    return *best;
}

GridSearchReport grid_search(const Dataset& ds, const HyperTabParams& base, const GridSpec& grid, std::size_t folds,
                             std::span<const std::uint64_t> seeds) {
    grid.validate(ds.features());
    const auto points = grid_points(grid);
    GridSearchReport report;
    for (std::size_t i = 0; i < points.size(); ++i) {
        GridResult r;
        r.index = i;
        r.point = points[i];
        const HyperTabParams p = with_point(base, points[i]);
        r.trainable_parameters =
            mlp::MlpSpec([&] {
                std::vector<std::size_t> sizes{ds.features()};
                sizes.insert(sizes.end(), p.hyper_hidden.begin(), p.hyper_hidden.end());
                sizes.push_back(make_target_spec(p.mask_size, p.target_size, ds.classes()).param_count());
                return sizes;
            }())
                .param_count();
        try {
            r.score = cross_validate(ds, p, folds, seeds).summary;
        } catch (const DivergenceError&) {
            r.diverged = true;
            r.score = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
        }
        report.results.push_back(r);
    }
    report.best = select_best(report.results);
    return report;
}

std::string format_grid_results(const GridSearchReport& report) {
    std::ostringstream out;
    out << "point,masks_no,mask_size,target_size,learning_rate,trainable_parameters,status,mean_balanced_accuracy,"
           "std_balanced_accuracy,selected\n";
    for (std::size_t i = 0; i < report.results.size(); ++i) {
        const auto& r = report.results[i];
        out << r.index << ',' << r.point.masks_no << ',' << r.point.mask_size << ',' << r.point.target_size << ','
            << format_double(r.point.learning_rate) << ',' << r.trainable_parameters << ','
            << (r.diverged ? "diverged" : "ok") << ',' << format_double(r.score.mean) << ','
            << format_double(r.score.stddev) << ',' << (i == report.best ? 1 : 0) << '\n';
    }
    return out.str();
}

HyperTabParams synthetic_params() {
    HyperTabParams p;
    p.masks_no = 100;
    p.mask_size = 10;
    p.target_size = 20;
    p.train.epochs = 100;
    // 40 training rows: small batches give more updates per epoch, which helped held-out accuracy.
    p.train.batch_size = 2;
    p.train.learning_rate = 3e-3;
    return p;
}

SyntheticReport run_synthetic(std::uint64_t seed, const HyperTabParams& params) {
    const SyntheticDataset synth = make_synthetic(seed);
    const Dataset& ds = synth.data;
    const SplitPlan plan = stratified_kfold(ds.y, 5, seed);
    const Dataset train_set = subset(ds, plan.train_indices(0));
    const Dataset test_set = subset(ds, plan.test_indices(0));

    HyperTabParams p = params;
    p.train.seed = run_seed(seed, 0);
    auto result = fit(train_set, p);
    const auto& model = result.model;

    SyntheticReport report;
    report.seed = seed;
    report.informative_column = synth.informative_column;
    report.test_accuracy = accuracy(test_set.y, model.predict_classes(test_set.x));
    report.total_targets = model.ensemble_size();

    const auto per_target = model.per_target_logits(test_set.x);
    double sum_inf = 0.0, sum_noise = 0.0;
    std::size_t count_inf = 0, count_noise = 0;
    for (std::size_t j = 0; j < per_target.size(); ++j) {
        const bool informative = model.pool()[j].contains(synth.informative_column);
        if (informative) ++report.informative_targets;
        const Matrix& logits = per_target[j];
        for (std::size_t i = 0; i < logits.rows(); ++i) {
            for (std::size_t c = 0; c < logits.cols(); ++c) {
                const double v = logits(i, c);
                report.logits.push_back({j, informative, i, test_set.y[i], c, v});
                if (informative) {
                    sum_inf += std::abs(v);
                    ++count_inf;
                } else {
                    sum_noise += std::abs(v);
                    ++count_noise;
                }
            }
        }
    }
    report.informative_fraction =
        static_cast<double>(report.informative_targets) / static_cast<double>(report.total_targets);
    report.mean_abs_logit_informative = count_inf ? sum_inf / static_cast<double>(count_inf) : 0.0;
    report.mean_abs_logit_noise = count_noise ? sum_noise / static_cast<double>(count_noise) : 0.0;
    return report;
}

std::string format_logit_histogram_csv(const SyntheticReport& report) {
    std::ostringstream out;
    out << "seed,target,informative,sample,true_class,logit_class,logit\n";
    for (const auto& r : report.logits) {
        out << report.seed << ',' << r.target << ',' << (r.informative ? 1 : 0) << ',' << r.sample << ','
            << r.true_class << ',' << r.logit_class << ',' << format_double(r.logit) << '\n';
    }
    return out.str();
}

std::string format_synthetic_summary(std::span<const SyntheticReport> reports) {
    std::ostringstream out;
    out << "seed,informative_column,test_accuracy,informative_targets,total_targets,informative_fraction,"
           "mean_abs_logit_informative,mean_abs_logit_noise\n";
    for (const auto& r : reports) {
        out << r.seed << ',' << r.informative_column << ',' << format_double(r.test_accuracy) << ','
            << r.informative_targets << ',' << r.total_targets << ',' << format_double(r.informative_fraction) << ','
            << format_double(r.mean_abs_logit_informative) << ',' << format_double(r.mean_abs_logit_noise) << '\n';
    }
    return out.str();
}

}  // namespace hypertab

#include "hypertab/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hypertab/benchmark.hpp"
#include "hypertab/error.hpp"
#include "hypertab/model.hpp"
#include "json_params.hpp"

namespace hypertab::cli {

namespace {

using detail::Json;

std::vector<std::string> config_keys() {
    std::vector<std::string> keys{"data",  "label_col", "seed",     "out",    "model",          "folds",
                                  "seeds", "grid",      "manifest", "budget", "summarize_only", "only"};
    const auto& p = detail::param_keys();
    keys.insert(keys.end(), p.begin(), p.end());
    return keys;
}

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
}

void prepare_out(const RunConfig& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.out, ec);
    if (ec) throw DataError("cannot create output directory '" + cfg.out.string() + "': " + ec.message());
}

Dataset load_data(const RunConfig& cfg) {
    if (cfg.data.empty()) throw ConfigError("data", "a dataset path is required (--data)");
    return load_csv(cfg.data, LabelColumn::parse(cfg.label_col));
}

HyperTabParams seeded(const RunConfig& cfg) {
    HyperTabParams p = cfg.params;
    p.train.seed = cfg.seed;
    return p;
}

GridSpec effective_grid(const RunConfig& cfg) {
    GridSpec g = cfg.grid;
    if (g.masks_no.empty()) g.masks_no = {cfg.params.masks_no};
    if (g.mask_size.empty()) g.mask_size = {cfg.params.mask_size};
    if (g.target_size.empty()) g.target_size = {cfg.params.target_size};
    if (g.learning_rate.empty()) g.learning_rate = {cfg.params.train.learning_rate};
    if (cfg.budget) g.budget = *cfg.budget;
    return g;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
    Json j;
    try {
        j = Json::parse(json_text);
    } catch (const Json::parse_error& e) {
        throw ConfigError("config", std::string("invalid JSON: ") + e.what());
    }
    detail::check_keys(j, config_keys(), "");
    RunConfig cfg;
    if (j.contains("data")) cfg.data = detail::as_string(j["data"], "data");
    if (j.contains("label_col")) cfg.label_col = detail::as_string(j["label_col"], "label_col");
    if (j.contains("seed")) cfg.seed = detail::as_seed(j["seed"], "seed");
    if (j.contains("out")) cfg.out = detail::as_string(j["out"], "out");
    if (j.contains("model")) cfg.model = detail::as_string(j["model"], "model");
    if (j.contains("folds")) cfg.folds = detail::as_count(j["folds"], "folds");
    if (j.contains("seeds")) cfg.seeds = detail::as_seeds(j["seeds"], "seeds");
    if (j.contains("grid")) cfg.grid = detail::read_grid(j["grid"], "grid");
    if (j.contains("manifest")) cfg.manifest = detail::as_string(j["manifest"], "manifest");
    if (j.contains("budget")) cfg.budget = detail::as_count(j["budget"], "budget");
    if (j.contains("summarize_only")) {
        if (!j["summarize_only"].is_boolean()) throw ConfigError("summarize_only", "expected true or false");
        cfg.summarize_only = j["summarize_only"].get<bool>();
    }
    if (j.contains("only")) {
        if (!j["only"].is_array()) throw ConfigError("only", "expected an array of dataset names");
        for (const auto& v : j["only"]) cfg.only.push_back(detail::as_string(v, "only"));
    }
    detail::read_params(j, cfg.params, "");
    return cfg;
}

RunConfig read_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str());
}

std::string run_config_to_json(const RunConfig& cfg) {
    Json j = detail::params_to_json(cfg.params);
    j["data"] = cfg.data;
    j["label_col"] = cfg.label_col;
    j["seed"] = cfg.seed;
    j["out"] = cfg.out.string();
    if (!cfg.model.empty()) j["model"] = cfg.model;
    j["folds"] = cfg.folds;
    j["seeds"] = cfg.seeds;
    Json g{{"masks_no", cfg.grid.masks_no},
           {"mask_size", cfg.grid.mask_size},
           {"target_size", cfg.grid.target_size},
           {"learning_rate", cfg.grid.learning_rate},
           {"budget", cfg.grid.budget},
           {"seed", cfg.grid.seed}};
    j["grid"] = g;
    return j.dump(2) + "\n";
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
    const Dataset ds = load_data(cfg);
    prepare_out(cfg);
    HyperTabParams p = seeded(cfg);
    p.train.trace_path = cfg.out / "loss_trace.csv";
    const auto result = fit(ds, p);
    const auto model_path = cfg.out / "model.htab";
    save(result.model, model_path);
    write_text(cfg.out / "config.json", run_config_to_json(cfg));
    out << "trained on " << ds.samples() << " samples, " << ds.features() << " features, " << ds.classes()
        << " classes\n"
        << "final loss " << result.epoch_losses.back() << "\n"
        << "trainable parameters " << result.model.hypernetwork().trainable_parameter_count() << "\n"
        << "model " << model_path.string() << " (fnv1a " << file_checksum(model_path) << ")\n";
    return kOk;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
    const Dataset ds = load_data(cfg);
    prepare_out(cfg);
    const auto report = cross_validate(ds, cfg.params, cfg.folds, cfg.seeds);
    write_text(cfg.out / "cv_scores.csv", format_fold_scores(report.scores));
    out << "balanced accuracy " << format_mean_std(report.summary) << " over " << report.scores.size()
        << " runs (" << cfg.seeds.size() << " seeds x " << cfg.folds << " folds)\n";
    return kOk;
}

int cmd_gridsearch(const RunConfig& cfg, std::ostream& out) {
    const Dataset ds = load_data(cfg);
    prepare_out(cfg);
    const GridSpec grid = effective_grid(cfg);
    const auto report = grid_search(ds, cfg.params, grid, cfg.folds, cfg.seeds);
    write_text(cfg.out / "grid_results.csv", format_grid_results(report));
    const auto& best = report.results[report.best];
    Json j = detail::grid_point_to_json(best.point);
    j["mean_balanced_accuracy"] = best.score.mean;
    j["std_balanced_accuracy"] = best.score.stddev;
    j["trainable_parameters"] = best.trainable_parameters;
    write_text(cfg.out / "best.json", j.dump(2) + "\n");
    out << "evaluated " << report.results.size() << " points; best masks_no=" << best.point.masks_no
        << " mask_size=" << best.point.mask_size << " target_size=" << best.point.target_size
        << " learning_rate=" << best.point.learning_rate << " -> " << format_mean_std(best.score) << "\n";
    return kOk;
}

int cmd_predict(const RunConfig& cfg, std::ostream& out) {
    if (cfg.model.empty()) throw ConfigError("model", "a model file is required (--model)");
    const HyperTabModel model = load(cfg.model);
    const Dataset ds = load_data(cfg);
    if (ds.features() != model.feature_count()) {
        throw DataError("data has " + std::to_string(ds.features()) + " feature columns, model expects " +
                        std::to_string(model.feature_count()));
    }
    prepare_out(cfg);
    const Matrix logits = model.predict_logits(ds.x);
    auto class_name = [&](std::size_t c) {
        return c < model.class_names().size() ? model.class_names()[c] : std::to_string(c);
    };
    std::string csv = "row,predicted";
    for (std::size_t c = 0; c < model.class_count(); ++c) csv += ",logit_" + quote_csv_field(class_name(c));
    csv += '\n';
    Labels predicted(ds.samples());
    for (std::size_t i = 0; i < ds.samples(); ++i) {
        predicted[i] = argmax(logits.row(i));
        csv += std::to_string(i) + ',' + quote_csv_field(class_name(static_cast<std::size_t>(predicted[i])));
        for (std::size_t c = 0; c < model.class_count(); ++c) csv += ',' + fmt17(logits(i, c));
        csv += '\n';
    }
    const auto path = cfg.out / "predictions.csv";
    write_text(path, csv);
    out << "wrote " << ds.samples() << " predictions to " << path.string() << "\n";

    // With a label column, report balanced accuracy against the model's class names.
    if (!ds.y.empty() && !model.class_names().empty()) {
        Labels truth;
        Labels pred;
        for (std::size_t i = 0; i < ds.samples(); ++i) {
            const auto& name = ds.class_names[static_cast<std::size_t>(ds.y[i])];
            const auto& names = model.class_names();
            const auto it = std::find(names.begin(), names.end(), name);
            if (it == names.end()) continue;
            truth.push_back(static_cast<int>(it - names.begin()));
            pred.push_back(predicted[i]);
        }
        if (!truth.empty()) out << "balanced accuracy " << balanced_accuracy(truth, pred) << "\n";
    }
    return kOk;
}

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
    prepare_out(cfg);
    HyperTabParams p = synthetic_params();
    // Only the epoch count is configurable; the rest is fixed by the study.
    p.train.epochs = cfg.params.train.epochs;
    std::vector<SyntheticReport> reports;
    double acc = 0.0;
    for (std::uint64_t seed : cfg.seeds) {
        auto r = run_synthetic(seed, p);
        write_text(cfg.out / ("logits_seed" + std::to_string(seed) + ".csv"), format_logit_histogram_csv(r));
        save_csv(make_synthetic(seed).data, cfg.out / ("synthetic_seed" + std::to_string(seed) + ".csv"));
        char line[200];
        std::snprintf(line, sizeof(line),
                      "seed %llu: accuracy %.2f, informative masks %zu/%zu (%.2f), mean |logit| informative %.3f "
                      "vs other %.3f\n",
                      static_cast<unsigned long long>(seed), r.test_accuracy, r.informative_targets,
                      r.total_targets, r.informative_fraction, r.mean_abs_logit_informative,
                      r.mean_abs_logit_noise);
        out << line;
        acc += r.test_accuracy;
        r.logits.clear();
        reports.push_back(std::move(r));
    }
    write_text(cfg.out / "synthetic_summary.csv", format_synthetic_summary(reports));
    if (!reports.empty()) out << "mean held-out accuracy " << acc / static_cast<double>(reports.size()) << "\n";
    return kOk;
}

int cmd_benchmark(const RunConfig& cfg, std::ostream& out) {
    const auto manifest = read_benchmark_manifest(cfg.manifest);
    prepare_out(cfg);
    BenchmarkOptions opt;
    opt.budget = cfg.budget;
    opt.cache_dir = cfg.out / "cache";
    opt.only = cfg.only;
    const auto report = cfg.summarize_only ? summarize_benchmark(manifest, opt) : run_benchmark(manifest, opt);
    write_text(cfg.out / "benchmark_report.csv", format_benchmark_csv(report));
    const std::string text = format_benchmark_text(report);
    write_text(cfg.out / "benchmark_report.txt", text);
    out << text;
    return kOk;
}

namespace {

// Flag values; a flag that was not given leaves the config untouched.
struct Flags {
    std::string config;
    std::optional<std::string> data, label_col, out, model, optimizer, manifest;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> masks_no, mask_size, target_size, epochs, batch_size, mask_batch_size, folds, budget;
    std::optional<double> learning_rate;
    std::vector<std::uint64_t> seeds;
    std::vector<std::size_t> hyper_hidden, grid_masks_no, grid_mask_size, grid_target_size;
    std::vector<double> grid_learning_rate;
    std::vector<std::string> only;
    bool summarize_only = false;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "JSON config file; flags override its values");
    cmd->add_option("--data", f.data, "CSV dataset");
    cmd->add_option("--label-col", f.label_col, "label column: header name, 0-based index, 'last' or 'none'");
    cmd->add_option("--seed", f.seed, "run seed");
    cmd->add_option("--out", f.out, "output directory");
}

void add_model(CLI::App* cmd, Flags& f) {
    cmd->add_option("--masks-no", f.masks_no, "number of masks in the pool");
    cmd->add_option("--mask-size", f.mask_size, "features per mask");
    cmd->add_option("--target-size", f.target_size, "hidden width of the target networks (0 = linear)");
    cmd->add_option("--hyper-hidden", f.hyper_hidden, "hypernetwork hidden sizes")->delimiter(',');
    cmd->add_option("--epochs", f.epochs, "training epochs");
    cmd->add_option("--learning-rate", f.learning_rate, "optimizer step size");
    cmd->add_option("--batch-size", f.batch_size, "rows per step");
    cmd->add_option("--mask-batch-size", f.mask_batch_size, "masks per step (0 = min(pool, 16))");
    cmd->add_option("--optimizer", f.optimizer, "adam or sgd");
}

void add_cv(CLI::App* cmd, Flags& f) {
    cmd->add_option("--folds", f.folds, "stratified folds");
    cmd->add_option("--seeds", f.seeds, "comma-separated repetition seeds")->delimiter(',');
}

RunConfig resolve(const Flags& f, bool seed_selects_repetition) {
    RunConfig cfg = f.config.empty() ? RunConfig{} : read_run_config(f.config);
    if (f.data) cfg.data = *f.data;
    if (f.label_col) cfg.label_col = *f.label_col;
    if (f.seed) cfg.seed = *f.seed;
    if (f.out) cfg.out = *f.out;
    if (f.model) cfg.model = *f.model;
    if (f.manifest) cfg.manifest = *f.manifest;
    if (f.masks_no) cfg.params.masks_no = *f.masks_no;
    if (f.mask_size) cfg.params.mask_size = *f.mask_size;
    if (f.target_size) cfg.params.target_size = *f.target_size;
    if (!f.hyper_hidden.empty()) cfg.params.hyper_hidden = f.hyper_hidden;
    if (f.epochs) cfg.params.train.epochs = *f.epochs;
    if (f.learning_rate) cfg.params.train.learning_rate = *f.learning_rate;
    if (f.batch_size) cfg.params.train.batch_size = *f.batch_size;
    if (f.mask_batch_size) cfg.params.train.mask_batch_size = *f.mask_batch_size;
    if (f.optimizer) cfg.params.train.optimizer = detail::parse_optimizer(*f.optimizer, "optimizer");
    if (f.folds) cfg.folds = *f.folds;
    if (!f.seeds.empty()) {
        cfg.seeds = f.seeds;
    } else if (seed_selects_repetition && f.seed) {
        cfg.seeds = {*f.seed};
    }
    if (f.budget) cfg.budget = *f.budget;
    if (!f.grid_masks_no.empty()) cfg.grid.masks_no = f.grid_masks_no;
    if (!f.grid_mask_size.empty()) cfg.grid.mask_size = f.grid_mask_size;
    if (!f.grid_target_size.empty()) cfg.grid.target_size = f.grid_target_size;
    if (!f.grid_learning_rate.empty()) cfg.grid.learning_rate = f.grid_learning_rate;
    if (!f.only.empty()) cfg.only = f.only;
    if (f.summarize_only) cfg.summarize_only = true;
    return cfg;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"HyperTab: hypernetwork-generated ensembles for small tabular datasets", "hypertab"};
    app.require_subcommand(1);
    Flags f;

    auto* train = app.add_subcommand("train", "train on the whole dataset and write a model file");
    add_common(train, f);
    add_model(train, f);

    auto* evaluate = app.add_subcommand("evaluate", "stratified k-fold cross-validation over several seeds");
    add_common(evaluate, f);
    add_model(evaluate, f);
    add_cv(evaluate, f);

    auto* grid = app.add_subcommand("gridsearch", "hyperparameter search by cross-validated balanced accuracy");
    add_common(grid, f);
    add_model(grid, f);
    add_cv(grid, f);
    grid->add_option("--grid-masks-no", f.grid_masks_no)->delimiter(',');
    grid->add_option("--grid-mask-size", f.grid_mask_size)->delimiter(',');
    grid->add_option("--grid-target-size", f.grid_target_size)->delimiter(',');
    grid->add_option("--grid-learning-rate", f.grid_learning_rate)->delimiter(',');
    grid->add_option("--budget", f.budget, "maximum number of grid points");

    auto* predict = app.add_subcommand("predict", "predict with a saved model");
    add_common(predict, f);
    predict->add_option("--model", f.model, "model file written by train");

    auto* synth = app.add_subcommand("synth", "synthetic irrelevant-feature study");
    add_common(synth, f);
    synth->add_option("--seeds", f.seeds, "comma-separated seeds")->delimiter(',');
    synth->add_option("--epochs", f.epochs, "training epochs");

    auto* bench = app.add_subcommand("benchmark", "grid search and CV for every dataset in a manifest");
    add_common(bench, f);
    bench->add_option("--manifest", f.manifest, "benchmark manifest (JSON)");
    bench->add_option("--budget", f.budget, "maximum grid points per dataset");
    bench->add_option("--only", f.only, "restrict to these dataset names")->delimiter(',');
    bench->add_flag("--summarize-only", f.summarize_only, "rebuild the report from cached fold scores");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kOk : kConfigError;
    }

    try {
        if (train->parsed()) return cmd_train(resolve(f, false), out);
        if (evaluate->parsed()) return cmd_evaluate(resolve(f, true), out);
        if (grid->parsed()) return cmd_gridsearch(resolve(f, true), out);
        if (predict->parsed()) return cmd_predict(resolve(f, false), out);
        if (synth->parsed()) return cmd_synth(resolve(f, true), out);
        if (bench->parsed()) return cmd_benchmark(resolve(f, false), out);
    } catch (const ConfigError& e) {
        err << "hypertab: config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const DivergenceError& e) {
        err << "hypertab: " << e.what() << "\n";
        return kDivergence;
    } catch (const ModelFileError& e) {
        err << "hypertab: model file: " << e.what() << "\n";
        return kDataError;
    } catch (const DataError& e) {
        err << "hypertab: data error: " << e.what() << "\n";
        return kDataError;
    } catch (const std::exception& e) {
        err << "hypertab: " << e.what() << "\n";
        return kFailure;
    }
    return kFailure;
}

}  // namespace hypertab::cli

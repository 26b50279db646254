#include <gtest/gtest.h>

#ifdef HYPERTAB_HAVE_CLI

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hypertab/cli.hpp"
#include "hypertab/error.hpp"
#include "hypertab/log.hpp"
#include "json.hpp"

using namespace hypertab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

struct QuietWarnings {
    WarningSink previous = set_warning_sink([](std::string_view) {});
    ~QuietWarnings() { set_warning_sink(previous); }
};

int run_cli(std::vector<std::string> args, std::string* out_text = nullptr) {
    std::vector<const char*> argv{"hypertab"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str() + err.str();
    return code;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_blobs(const fs::path& p) {
    std::ofstream out(p);
    out << "u,v,w,label\n";
    for (int i = 0; i < 30; ++i) {
        const double s = i % 2 == 0 ? -1.0 : 1.0;
        out << s + 0.05 * (i % 7) << ',' << s - 0.04 * (i % 5) << ',' << s + 0.03 * (i % 3) << ','
            << (i % 2 == 0 ? "left" : "right") << '\n';
    }
}

const std::vector<std::string> kSmall{"--masks-no", "4", "--mask-size", "2", "--target-size", "3",
                                      "--hyper-hidden", "8", "--epochs", "20", "--batch-size", "8",
                                      "--learning-rate", "0.01"};

std::vector<std::string> with_small(std::vector<std::string> args) {
    args.insert(args.end(), kSmall.begin(), kSmall.end());
    return args;
}

}  // namespace

TEST(Cli, ParseRunConfigIsStrict) {
    const auto cfg = cli::parse_run_config(R"({"data": "x.csv", "seed": 7, "masks_no": 20, "optimizer": "sgd",
                                               "grid": {"target_size": [5, 10]}})");
    EXPECT_EQ(cfg.data, "x.csv");
    EXPECT_EQ(cfg.seed, 7u);
    EXPECT_EQ(cfg.params.masks_no, 20u);
    EXPECT_EQ(cfg.params.train.optimizer, OptimizerKind::Sgd);
    EXPECT_EQ(cfg.grid.target_size, (std::vector<std::size_t>{5, 10}));

    try {
        cli::parse_run_config(R"({"mask_sise": 3})");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field(), "mask_sise");
    }
    EXPECT_THROW(cli::parse_run_config(R"({"masks_no": "many"})"), ConfigError);
    EXPECT_THROW(cli::parse_run_config(R"({"masks_no": -1})"), ConfigError);
    EXPECT_THROW(cli::parse_run_config(R"({"optimizer": "rmsprop"})"), ConfigError);
    EXPECT_THROW(cli::parse_run_config("[1, 2"), ConfigError);
}

TEST(Cli, ConfigJsonRoundTrip) {
    auto cfg = cli::parse_run_config(R"({"data": "d.csv", "epochs": 3, "learning_rate": 0.5, "seeds": [4, 5]})");
    const auto back = cli::parse_run_config(cli::run_config_to_json(cfg));
    EXPECT_EQ(back.data, "d.csv");
    EXPECT_EQ(back.params.train.epochs, 3u);
    EXPECT_EQ(back.params.train.learning_rate, 0.5);
    EXPECT_EQ(back.seeds, (std::vector<std::uint64_t>{4, 5}));
}

TEST(Cli, HelpAndUsageErrors) {
    std::string text;
    EXPECT_EQ(run_cli({"--help"}, &text), cli::kOk);
    EXPECT_NE(text.find("train"), std::string::npos);
    EXPECT_EQ(run_cli({}), cli::kConfigError);
    EXPECT_EQ(run_cli({"frobnicate"}), cli::kConfigError);
    EXPECT_EQ(run_cli({"train", "--no-such-flag"}), cli::kConfigError);
}

TEST(Cli, ExitCodes) {
    QuietWarnings quiet;
    TempDir dir("hypertab_cli_codes");
    write_blobs(dir.path / "d.csv");
    const std::string data = (dir.path / "d.csv").string();
    const std::string out = (dir.path / "out").string();

    // Missing --data is a configuration problem.
    EXPECT_EQ(run_cli({"train", "--out", out}), cli::kConfigError);
    // Mask size larger than the feature count.
    EXPECT_EQ(run_cli({"train", "--data", data, "--out", out, "--mask-size", "9"}), cli::kConfigError);
    // Unreadable data.
    EXPECT_EQ(run_cli({"train", "--data", (dir.path / "nope.csv").string(), "--out", out}), cli::kDataError);
    // Bad config file content.
    write_file(dir.path / "bad.json", R"({"epochs": "ten"})");
    EXPECT_EQ(run_cli({"train", "--config", (dir.path / "bad.json").string(), "--data", data}), cli::kConfigError);
    // Corrupt model file.
    write_file(dir.path / "model.htab", "garbage garbage garbage");
    EXPECT_EQ(run_cli({"predict", "--data", data, "--model", (dir.path / "model.htab").string(), "--out", out}),
              cli::kDataError);
    // An absurd learning rate blows the loss up.
    EXPECT_EQ(run_cli({"train", "--data", data, "--out", out, "--masks-no", "4", "--mask-size", "2", "--epochs", "5",
                       "--optimizer", "sgd", "--learning-rate", "1e300"}),
              cli::kDivergence);
}

TEST(Cli, FlagsOverrideConfigFile) {
    QuietWarnings quiet;
    TempDir dir("hypertab_cli_override");
    write_blobs(dir.path / "d.csv");
    write_file(dir.path / "cfg.json", R"({"epochs": 2, "seed": 3, "masks_no": 4, "mask_size": 2,
                                           "target_size": 3, "hyper_hidden": [8], "batch_size": 8})");
    const auto out = dir.path / "out";
    ASSERT_EQ(run_cli({"train", "--config", (dir.path / "cfg.json").string(), "--data",
                       (dir.path / "d.csv").string(), "--out", out.string(), "--epochs", "5"}),
              cli::kOk);
    const auto written = cli::read_run_config(out / "config.json");
    EXPECT_EQ(written.params.train.epochs, 5u);  // flag wins
    EXPECT_EQ(written.seed, 3u);                 // file value kept
    EXPECT_EQ(written.params.masks_no, 4u);
}

TEST(Cli, TrainThenPredict) {
    QuietWarnings quiet;
    TempDir dir("hypertab_cli_train");
    write_blobs(dir.path / "d.csv");
    const std::string data = (dir.path / "d.csv").string();
    const auto out = dir.path / "out";
    ASSERT_EQ(run_cli(with_small({"train", "--data", data, "--out", out.string(), "--seed", "1"})), cli::kOk);
    EXPECT_TRUE(fs::exists(out / "model.htab"));
    const std::string trace = read_file(out / "loss_trace.csv");
    EXPECT_EQ(std::count(trace.begin(), trace.end(), '\n'), 21);

    std::string text;
    ASSERT_EQ(run_cli({"predict", "--data", data, "--model", (out / "model.htab").string(), "--out",
                       (dir.path / "pred").string()},
                      &text),
              cli::kOk);
    const std::string preds = read_file(dir.path / "pred" / "predictions.csv");
    EXPECT_EQ(preds.substr(0, preds.find('\n')), "row,predicted,logit_left,logit_right");
    EXPECT_EQ(std::count(preds.begin(), preds.end(), '\n'), 31);
    EXPECT_NE(text.find("balanced accuracy"), std::string::npos) << text;

    // Unlabeled input works with --label-col none.
    std::ofstream(dir.path / "unlabeled.csv") << "u,v,w\n-1,-1,-1\n1,1,1\n";
    ASSERT_EQ(run_cli({"predict", "--data", (dir.path / "unlabeled.csv").string(), "--label-col", "none",
                       "--model", (out / "model.htab").string(), "--out", (dir.path / "pred2").string()}),
              cli::kOk);
    const std::string p2 = read_file(dir.path / "pred2" / "predictions.csv");
    EXPECT_NE(p2.find("0,left"), std::string::npos) << p2;
    EXPECT_NE(p2.find("1,right"), std::string::npos) << p2;
}

TEST(Cli, EvaluateAndGridsearchWriteResults) {
    QuietWarnings quiet;
    TempDir dir("hypertab_cli_eval");
    write_blobs(dir.path / "d.csv");
    const std::string data = (dir.path / "d.csv").string();
    ASSERT_EQ(run_cli(with_small({"evaluate", "--data", data, "--out", (dir.path / "ev").string(), "--folds", "3",
                                  "--seeds", "0,1"})),
              cli::kOk);
    const std::string cv = read_file(dir.path / "ev" / "cv_scores.csv");
    EXPECT_EQ(std::count(cv.begin(), cv.end(), '\n'), 7);

    ASSERT_EQ(run_cli(with_small({"gridsearch", "--data", data, "--out", (dir.path / "gs").string(), "--folds", "3",
                                  "--seed", "0", "--grid-target-size", "2,3"})),
              cli::kOk);
    const auto best = nlohmann::json::parse(read_file(dir.path / "gs" / "best.json"));
    EXPECT_TRUE(best.contains("target_size") || best.contains("point")) << best.dump();
    const std::string grid = read_file(dir.path / "gs" / "grid_results.csv");
    EXPECT_EQ(std::count(grid.begin(), grid.end(), '\n'), 3);
}

TEST(Cli, SynthWritesPerSeedFiles) {
    QuietWarnings quiet;
    TempDir dir("hypertab_cli_synth");
    ASSERT_EQ(run_cli({"synth", "--seeds", "2", "--epochs", "2", "--out", dir.path.string()}), cli::kOk);
    EXPECT_TRUE(fs::exists(dir.path / "logits_seed2.csv"));
    EXPECT_TRUE(fs::exists(dir.path / "synthetic_seed2.csv"));
    EXPECT_TRUE(fs::exists(dir.path / "synthetic_summary.csv"));
}

#endif

#pragma once

// The `hypertab` command line: train, evaluate, gridsearch, predict, synth and
// benchmark. Options come from a JSON config file (--config) and flags; a
// flag always wins over the file. See README.md for the config schema.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hypertab/experiment.hpp"

namespace hypertab::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kConfigError = 2,
    kDataError = 3,  // unreadable or malformed data, model files included
    kDivergence = 4,
};

struct RunConfig {
    std::string data;
    std::string label_col = "last";
    std::uint64_t seed = 0;
    std::filesystem::path out = "hypertab_out";
    std::string model;  // model file read by predict
    HyperTabParams params;
    std::size_t folds = 5;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};  // CV and synth repetitions
    GridSpec grid;
    std::string manifest = "benchmarks/manifest.json";
    std::optional<std::size_t> budget;
    std::vector<std::string> only;
    bool summarize_only = false;
};

/// Strict parse: unknown keys and wrongly typed values raise ConfigError naming the key.
RunConfig parse_run_config(const std::string& json_text);
RunConfig read_run_config(const std::filesystem::path& path);
std::string run_config_to_json(const RunConfig& cfg);

int cmd_train(const RunConfig& cfg, std::ostream& out);
int cmd_evaluate(const RunConfig& cfg, std::ostream& out);
int cmd_gridsearch(const RunConfig& cfg, std::ostream& out);
int cmd_predict(const RunConfig& cfg, std::ostream& out);
int cmd_synth(const RunConfig& cfg, std::ostream& out);
int cmd_benchmark(const RunConfig& cfg, std::ostream& out);

/// Parses argv, dispatches, and maps exceptions to exit codes. Never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hypertab::cli

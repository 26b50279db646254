#pragma once

// Internal helpers shared by the CLI config reader and the benchmark manifest
// reader. Every type or range problem becomes a ConfigError naming the key.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "hypertab/error.hpp"
#include "hypertab/experiment.hpp"

namespace hypertab::detail {

using Json = nlohmann::json;

inline const std::vector<std::string>& param_keys() {
    static const std::vector<std::string> keys{"masks_no",   "mask_size",     "target_size", "hyper_hidden",
                                               "epochs",     "learning_rate", "batch_size",  "mask_batch_size",
                                               "optimizer",  "beta1",         "beta2",       "epsilon"};
    return keys;
}

inline void check_keys(const Json& obj, const std::vector<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where.empty() ? "config" : where, "expected a JSON object");
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError(where.empty() ? key : where + "." + key, "unknown key");
        }
    }
}

inline std::string qualify(const std::string& where, const std::string& key) {
    return where.empty() ? key : where + "." + key;
}

inline std::size_t as_count(const Json& v, const std::string& field) {
    if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(field, "expected a non-negative integer");
    return v.get<std::size_t>();
}

inline std::uint64_t as_seed(const Json& v, const std::string& field) {
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0)) {
        throw ConfigError(field, "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

inline double as_number(const Json& v, const std::string& field) {
    if (!v.is_number()) throw ConfigError(field, "expected a number");
    return v.get<double>();
}

inline std::string as_string(const Json& v, const std::string& field) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw ConfigError(field, "expected a string");
}

inline std::vector<std::size_t> as_counts(const Json& v, const std::string& field) {
    if (!v.is_array()) throw ConfigError(field, "expected an array of integers");
    std::vector<std::size_t> out;
    for (const auto& e : v) out.push_back(as_count(e, field));
    return out;
}

inline std::vector<std::uint64_t> as_seeds(const Json& v, const std::string& field) {
    if (!v.is_array()) throw ConfigError(field, "expected an array of integers");
    std::vector<std::uint64_t> out;
    for (const auto& e : v) out.push_back(as_seed(e, field));
    return out;
}

inline std::vector<double> as_numbers(const Json& v, const std::string& field) {
    if (!v.is_array()) throw ConfigError(field, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) out.push_back(as_number(e, field));
    return out;
}

inline OptimizerKind parse_optimizer(const std::string& name, const std::string& field) {
    if (name == "adam") return OptimizerKind::Adam;
    if (name == "sgd") return OptimizerKind::Sgd;
    throw ConfigError(field, "expected \"adam\" or \"sgd\", got \"" + name + "\"");
}

inline const char* optimizer_name(OptimizerKind k) { return k == OptimizerKind::Adam ? "adam" : "sgd"; }

/// Reads whichever model/training keys are present in obj into p. Other keys are ignored here.
inline void read_params(const Json& obj, HyperTabParams& p, const std::string& where) {
    auto field = [&](const char* key) { return qualify(where, key); };
    if (obj.contains("masks_no")) p.masks_no = as_count(obj["masks_no"], field("masks_no"));
    if (obj.contains("mask_size")) p.mask_size = as_count(obj["mask_size"], field("mask_size"));
    if (obj.contains("target_size")) p.target_size = as_count(obj["target_size"], field("target_size"));
    if (obj.contains("hyper_hidden")) p.hyper_hidden = as_counts(obj["hyper_hidden"], field("hyper_hidden"));
    if (obj.contains("epochs")) p.train.epochs = as_count(obj["epochs"], field("epochs"));
    if (obj.contains("learning_rate")) p.train.learning_rate = as_number(obj["learning_rate"], field("learning_rate"));
    if (obj.contains("batch_size")) p.train.batch_size = as_count(obj["batch_size"], field("batch_size"));
    if (obj.contains("mask_batch_size")) {
        p.train.mask_batch_size = as_count(obj["mask_batch_size"], field("mask_batch_size"));
    }
    if (obj.contains("optimizer")) {
        p.train.optimizer = parse_optimizer(as_string(obj["optimizer"], field("optimizer")), field("optimizer"));
    }
    if (obj.contains("beta1")) p.train.beta1 = as_number(obj["beta1"], field("beta1"));
    if (obj.contains("beta2")) p.train.beta2 = as_number(obj["beta2"], field("beta2"));
    if (obj.contains("epsilon")) p.train.epsilon = as_number(obj["epsilon"], field("epsilon"));
}

inline Json params_to_json(const HyperTabParams& p) {
    return Json{{"masks_no", p.masks_no},
                {"mask_size", p.mask_size},
                {"target_size", p.target_size},
                {"hyper_hidden", p.hyper_hidden},
                {"epochs", p.train.epochs},
                {"learning_rate", p.train.learning_rate},
                {"batch_size", p.train.batch_size},
                {"mask_batch_size", p.train.mask_batch_size},
                {"optimizer", optimizer_name(p.train.optimizer)},
                {"beta1", p.train.beta1},
                {"beta2", p.train.beta2},
                {"epsilon", p.train.epsilon}};
}

inline GridSpec read_grid(const Json& obj, const std::string& where) {
    check_keys(obj, {"masks_no", "mask_size", "target_size", "learning_rate", "budget", "seed"}, where);
    auto field = [&](const char* key) { return qualify(where, key); };
    GridSpec g;
    if (obj.contains("masks_no")) g.masks_no = as_counts(obj["masks_no"], field("masks_no"));
    if (obj.contains("mask_size")) g.mask_size = as_counts(obj["mask_size"], field("mask_size"));
    if (obj.contains("target_size")) g.target_size = as_counts(obj["target_size"], field("target_size"));
    if (obj.contains("learning_rate")) g.learning_rate = as_numbers(obj["learning_rate"], field("learning_rate"));
    if (obj.contains("budget")) g.budget = as_count(obj["budget"], field("budget"));
    if (obj.contains("seed")) g.seed = as_seed(obj["seed"], field("seed"));
    return g;
}

inline Json grid_point_to_json(const GridPoint& p) {
    return Json{{"masks_no", p.masks_no},
                {"mask_size", p.mask_size},
                {"target_size", p.target_size},
                {"learning_rate", p.learning_rate}};
}

}  // namespace hypertab::detail

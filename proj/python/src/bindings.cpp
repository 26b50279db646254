#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "hypertab/data.hpp"
#include "hypertab/error.hpp"
#include "hypertab/experiment.hpp"
#include "hypertab/metrics.hpp"
#include "hypertab/model.hpp"
#include "hypertab/trainer.hpp"

namespace py = pybind11;
using namespace hypertab;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<int, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const DoubleArray& a) {
    if (a.ndim() != 2) throw ContractError("expected a 2-D array, got " + std::to_string(a.ndim()) + " dimensions");
    const auto rows = static_cast<std::size_t>(a.shape(0));
    const auto cols = static_cast<std::size_t>(a.shape(1));
    return Matrix(rows, cols, Vector(a.data(), a.data() + rows * cols));
}

Labels to_labels(const IntArray& a) {
    if (a.ndim() != 1) throw ContractError("labels must be a 1-D array");
    return Labels(a.data(), a.data() + a.size());
}

DoubleArray to_array(const Matrix& m) {
    DoubleArray out({m.rows(), m.cols()});
    std::copy(m.data(), m.data() + m.size(), out.mutable_data());
    return out;
}

IntArray to_array(const Labels& y) {
    IntArray out(static_cast<py::ssize_t>(y.size()));
    std::copy(y.begin(), y.end(), out.mutable_data());
    return out;
}

Dataset make_dataset(const DoubleArray& x, const IntArray& y, std::vector<std::string> class_names) {
    Dataset ds;
    ds.x = to_matrix(x);
    ds.y = to_labels(y);
    if (ds.y.size() != ds.x.rows()) throw DataError("x has " + std::to_string(ds.x.rows()) + " rows but y has " +
                                                   std::to_string(ds.y.size()) + " labels");
    int top = -1;
    for (int v : ds.y) {
        if (v < 0) throw DataError("labels must be non-negative integers");
        top = std::max(top, v);
    }
    if (class_names.empty()) {
        for (int c = 0; c <= top; ++c) class_names.push_back(std::to_string(c));
    } else if (static_cast<int>(class_names.size()) <= top) {
        throw DataError("class_names has fewer entries than the largest label");
    }
    ds.class_names = std::move(class_names);
    for (std::size_t j = 0; j < ds.x.cols(); ++j) ds.feature_names.push_back("x" + std::to_string(j));
    return ds;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "HyperTab: a hypernetwork that generates an ensemble of small target networks over feature subsets.";

    auto base = py::register_exception<Error>(m, "HyperTabError");
    py::register_exception<ContractError>(m, "ContractError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<DataError>(m, "DataError", base.ptr());
    py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());
    auto model_error = py::register_exception<ModelFileError>(m, "ModelFileError", base.ptr());
    py::register_exception<VersionMismatchError>(m, "VersionMismatchError", model_error.ptr());
    py::register_exception<CorruptFileError>(m, "CorruptFileError", model_error.ptr());
    py::register_exception<InconsistentModelError>(m, "InconsistentModelError", model_error.ptr());

    py::class_<HyperTabParams>(m, "Params")
        .def(py::init([](std::size_t masks_no, std::size_t mask_size, std::size_t target_size,
                         std::vector<std::size_t> hyper_hidden, std::size_t epochs, double learning_rate,
                         std::size_t batch_size, std::size_t mask_batch_size, std::uint64_t seed,
                         const std::string& optimizer) {
                 HyperTabParams p;
                 p.masks_no = masks_no;
                 p.mask_size = mask_size;
                 p.target_size = target_size;
                 p.hyper_hidden = std::move(hyper_hidden);
                 p.train.epochs = epochs;
                 p.train.learning_rate = learning_rate;
                 p.train.batch_size = batch_size;
                 p.train.mask_batch_size = mask_batch_size;
                 p.train.seed = seed;
                 if (optimizer == "adam") {
                     p.train.optimizer = OptimizerKind::Adam;
                 } else if (optimizer == "sgd") {
                     p.train.optimizer = OptimizerKind::Sgd;
                 } else {
                     throw ConfigError("optimizer", "expected 'adam' or 'sgd', got '" + optimizer + "'");
                 }
                 return p;
             }),
             py::kw_only(), py::arg("masks_no") = 100, py::arg("mask_size") = 10, py::arg("target_size") = 20,
             py::arg("hyper_hidden") = kDefaultHyperHidden, py::arg("epochs") = 100, py::arg("learning_rate") = 3e-3,
             py::arg("batch_size") = 32, py::arg("mask_batch_size") = 0, py::arg("seed") = 0,
             py::arg("optimizer") = "adam")
        .def_readwrite("masks_no", &HyperTabParams::masks_no)
        .def_readwrite("mask_size", &HyperTabParams::mask_size)
        .def_readwrite("target_size", &HyperTabParams::target_size)
        .def_readwrite("hyper_hidden", &HyperTabParams::hyper_hidden)
        .def_property(
            "epochs", [](const HyperTabParams& p) { return p.train.epochs; },
            [](HyperTabParams& p, std::size_t v) { p.train.epochs = v; })
        .def_property(
            "learning_rate", [](const HyperTabParams& p) { return p.train.learning_rate; },
            [](HyperTabParams& p, double v) { p.train.learning_rate = v; })
        .def_property(
            "batch_size", [](const HyperTabParams& p) { return p.train.batch_size; },
            [](HyperTabParams& p, std::size_t v) { p.train.batch_size = v; })
        .def_property(
            "mask_batch_size", [](const HyperTabParams& p) { return p.train.mask_batch_size; },
            [](HyperTabParams& p, std::size_t v) { p.train.mask_batch_size = v; })
        .def_property(
            "seed", [](const HyperTabParams& p) { return p.train.seed; },
            [](HyperTabParams& p, std::uint64_t v) { p.train.seed = v; })
        .def("__repr__", [](const HyperTabParams& p) {
            return "Params(masks_no=" + std::to_string(p.masks_no) + ", mask_size=" + std::to_string(p.mask_size) +
                   ", target_size=" + std::to_string(p.target_size) + ", epochs=" + std::to_string(p.train.epochs) +
                   ", learning_rate=" + std::to_string(p.train.learning_rate) + ")";
        });

    m.def("synthetic_params", &synthetic_params, "Defaults for the synthetic irrelevant-feature study.");

    py::class_<HyperTabModel>(m, "Model")
        .def_property_readonly("feature_count", &HyperTabModel::feature_count)
        .def_property_readonly("class_count", &HyperTabModel::class_count)
        .def_property_readonly("ensemble_size", &HyperTabModel::ensemble_size)
        .def_property_readonly("class_names", &HyperTabModel::class_names)
        .def_property_readonly("trainable_parameter_count",
                               [](const HyperTabModel& mdl) { return mdl.hypernetwork().trainable_parameter_count(); })
        .def_property_readonly("masks",
                               [](const HyperTabModel& mdl) {
                                   std::vector<std::vector<std::size_t>> out;
                                   for (const auto& mask : mdl.pool().masks()) out.push_back(mask.indices());
                                   return out;
                               })
        .def(
            "predict_logits", [](const HyperTabModel& mdl, const DoubleArray& x) { return to_array(mdl.predict_logits(to_matrix(x))); },
            py::arg("x"), "Mean logits of all target networks for raw (unstandardized) rows.")
        .def(
            "predict", [](const HyperTabModel& mdl, const DoubleArray& x) { return to_array(mdl.predict_classes(to_matrix(x))); },
            py::arg("x"), "Class indices, argmax of the mean logits.")
        .def("save", [](const HyperTabModel& mdl, const std::filesystem::path& path) { save(mdl, path); },
             py::arg("path"))
        .def("to_bytes",
             [](const HyperTabModel& mdl) {
                 const auto bytes = serialize(mdl);
                 return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
             })
        .def_static("load", [](const std::filesystem::path& path) { return load(path); }, py::arg("path"))
        .def_static(
            "from_bytes",
            [](const py::bytes& b) {
                const std::string s = b;
                return deserialize(std::span(reinterpret_cast<const unsigned char*>(s.data()), s.size()));
            },
            py::arg("data"));

    m.def(
        "fit",
        [](const DoubleArray& x, const IntArray& y, const HyperTabParams& params, std::vector<std::string> class_names) {
            const Dataset ds = make_dataset(x, y, std::move(class_names));
            std::optional<TrainResult> r;
            {
                py::gil_scoped_release release;
                r.emplace(fit(ds, params));
            }
            return py::make_tuple(std::move(r->model), r->epoch_losses);
        },
        py::arg("x"), py::arg("y"), py::arg("params") = HyperTabParams{}, py::arg("class_names") = std::vector<std::string>{},
        "Train on raw features and integer labels. Returns (model, per-epoch mean losses).");

    m.def(
        "cross_validate",
        [](const DoubleArray& x, const IntArray& y, const HyperTabParams& params, std::size_t folds,
           std::vector<std::uint64_t> seeds) {
            const Dataset ds = make_dataset(x, y, {});
            CvReport rep;
            {
                py::gil_scoped_release release;
                rep = cross_validate(ds, params, folds, seeds);
            }
            py::list scores;
            for (const auto& s : rep.scores) scores.append(py::make_tuple(s.seed, s.fold, s.balanced_accuracy));
            return py::make_tuple(scores, rep.summary.mean, rep.summary.stddev);
        },
        py::arg("x"), py::arg("y"), py::arg("params") = HyperTabParams{}, py::arg("folds") = 5,
        py::arg("seeds") = std::vector<std::uint64_t>{0, 1, 2, 3, 4},
        "Stratified k-fold CV per seed. Returns ([(seed, fold, balanced_accuracy)], mean, std).");

    m.def(
        "load_csv",
        [](const std::filesystem::path& path, const std::string& label_col) {
            const Dataset ds = load_csv(path, LabelColumn::parse(label_col));
            py::dict out;
            out["x"] = to_array(ds.x);
            out["y"] = to_array(ds.y);
            out["feature_names"] = ds.feature_names;
            out["class_names"] = ds.class_names;
            return out;
        },
        py::arg("path"), py::arg("label_col") = "last",
        "Read a CSV into a dict with x, y, feature_names and class_names.");

    m.def(
        "make_synthetic",
        [](std::uint64_t seed) {
            const auto s = make_synthetic(seed);
            return py::make_tuple(to_array(s.data.x), to_array(s.data.y), s.informative_column);
        },
        py::arg("seed"), "50 x 50 synthetic dataset with one informative column. Returns (x, y, informative_column).");

    m.def(
        "run_synthetic",
        [](std::uint64_t seed, const HyperTabParams& params) {
            SyntheticReport r;
            {
                py::gil_scoped_release release;
                r = run_synthetic(seed, params);
            }
            py::dict out;
            out["seed"] = r.seed;
            out["informative_column"] = r.informative_column;
            out["test_accuracy"] = r.test_accuracy;
            out["informative_targets"] = r.informative_targets;
            out["total_targets"] = r.total_targets;
            out["informative_fraction"] = r.informative_fraction;
            out["mean_abs_logit_informative"] = r.mean_abs_logit_informative;
            out["mean_abs_logit_noise"] = r.mean_abs_logit_noise;
            return out;
        },
        py::arg("seed"), py::arg("params") = synthetic_params());

    m.def(
        "balanced_accuracy",
        [](const IntArray& t, const IntArray& p) { return balanced_accuracy(to_labels(t), to_labels(p)); },
        py::arg("y_true"), py::arg("y_pred"));

    m.def(
        "mean_ranks",
        [](const DoubleArray& scores) {
            const Matrix s = to_matrix(scores);
            ScoreTable t;
            for (std::size_t i = 0; i < s.rows(); ++i) t.methods.push_back("m" + std::to_string(i));
            for (std::size_t j = 0; j < s.cols(); ++j) t.datasets.push_back("d" + std::to_string(j));
            t.scores = s;
            return mean_ranks(t);
        },
        py::arg("scores"), "Mean rank per method (rows) over datasets (columns); 1 is best, ties averaged.");

    m.attr("MODEL_FORMAT_VERSION") = kModelFormatVersion;
}

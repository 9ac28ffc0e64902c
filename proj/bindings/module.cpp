#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "cropspec/analysis.hpp"
#include "cropspec/classify.hpp"
#include "cropspec/dataset.hpp"
#include "cropspec/errors.hpp"
#include "cropspec/eval.hpp"
#include "cropspec/mlp.hpp"
#include "cropspec/model_io.hpp"

namespace py = pybind11;
using namespace cropspec;

namespace {

CropLabel crop_arg(const std::string& s) {
  const std::optional<CropLabel> c = crop_from_string(s);
  if (!c) throw UsageError("unknown crop \"" + s + "\"");
  return *c;
}

StageLabel stage_arg(const std::string& s) {
  const std::optional<StageLabel> v = stage_from_string(s);
  if (!v) throw UsageError("unknown stage \"" + s + "\"");
  return *v;
}

LabelingMode mode_arg(const std::string& s) {
  if (s == "crop") return LabelingMode::CropOnly;
  if (s == "joint") return LabelingMode::JointCropStage;
  throw UsageError("unknown mode \"" + s + "\" (expected crop or joint)");
}

DiscriminantKind kind_arg(const std::string& s) {
  if (s == "lda") return DiscriminantKind::LDA;
  if (s == "qda") return DiscriminantKind::QDA;
  throw UsageError("unknown kind \"" + s + "\" (expected lda or qda)");
}

PriorMode priors_arg(const std::string& s) {
  if (s == "uniform") return PriorMode::Uniform;
  if (s == "empirical") return PriorMode::Empirical;
  throw UsageError("unknown priors \"" + s + "\" (expected uniform or empirical)");
}

std::vector<std::string> crop_names(const Dataset& ds) {
  std::vector<std::string> out;
  out.reserve(ds.records.size());
  for (const SampleRecord& r : ds.records) out.emplace_back(to_string(r.crop));
  return out;
}

std::vector<std::string> stage_names(const Dataset& ds) {
  std::vector<std::string> out;
  out.reserve(ds.records.size());
  for (const SampleRecord& r : ds.records) out.emplace_back(to_string(r.stage));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "spectral-library crop classification toolkit";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("size", &Dataset::size)
      .def_property_readonly("bands", &Dataset::bands)
      .def_property_readonly("wavelengths",
                             [](const Dataset& ds) { return ds.grid.wavelengths_nm; })
      .def("spectra", [](const Dataset& ds) { return spectra_matrix(ds); })
      .def("crops", &crop_names)
      .def("stages", &stage_names)
      .def("__len__", &Dataset::size)
      .def("__repr__", [](const Dataset& ds) {
        std::ostringstream s;
        s << "Dataset(records=" << ds.size() << ", bands=" << ds.bands() << ")";
        return s.str();
      });

  m.def(
      "load_library",
      [](const std::string& path, const std::optional<std::string>& profile) {
        return load_library(path,
                            profile ? load_ingest_config(*profile) : canonical_ingest_config());
      },
      py::arg("path"), py::arg("profile") = std::nullopt,
      "Load a delimiter-separated spectral library file");

  m.def(
      "make_dataset",
      [](const std::vector<double>& wavelengths, const Eigen::MatrixXd& spectra,
         const std::vector<std::string>& crops, const std::vector<std::string>& stages) {
        if (spectra.rows() != static_cast<long>(crops.size()) ||
            spectra.rows() != static_cast<long>(stages.size()))
          throw DataError("spectra rows, crops, and stages must have the same length");
        if (spectra.cols() != static_cast<long>(wavelengths.size()))
          throw DataError("spectra columns must match the wavelength count");
        Dataset ds;
        ds.grid.wavelengths_nm = wavelengths;
        for (long i = 0; i < spectra.rows(); ++i) {
          SampleRecord rec;
          rec.reflectance = spectra.row(i).transpose();
          rec.crop = crop_arg(crops[static_cast<std::size_t>(i)]);
          rec.stage = stage_arg(stages[static_cast<std::size_t>(i)]);
          rec.aez = "python";
          rec.source_id = "array";
          ds.records.push_back(std::move(rec));
        }
        validate(ds);
        return ds;
      },
      py::arg("wavelengths"), py::arg("spectra"), py::arg("crops"), py::arg("stages"),
      "Build a dataset from arrays: spectra is records x bands, labels use the canonical spellings");

  m.def(
      "synthesize",
      [](const std::string& spec_json, std::uint64_t seed) {
        return synthesize(parse_synthetic_spec(spec_json), seed);
      },
      py::arg("spec_json"), py::arg("seed") = 2024,
      "Draw a synthetic library from a JSON generator spec");

  m.def(
      "summarize", [](const Dataset& ds) { return render_summary(summarize(ds)); }, py::arg("ds"),
      "Human-readable record/band/label summary");

  m.def(
      "write_library", [](const Dataset& ds, const std::string& path) { write_library(ds, path); },
      py::arg("ds"), py::arg("path"), "Write the canonical library layout");

  py::class_<DiscriminantModel>(m, "DiscriminantModel")
      .def_property_readonly("kind",
                             [](const DiscriminantModel& d) {
                               return d.kind == DiscriminantKind::LDA ? "lda" : "qda";
                             })
      .def_property_readonly("mode",
                             [](const DiscriminantModel& d) {
                               return d.mode == LabelingMode::CropOnly ? "crop" : "joint";
                             })
      .def_property_readonly("shrinkage", [](const DiscriminantModel& d) { return d.lambda; })
      .def_property_readonly("classes",
                             [](const DiscriminantModel& d) {
                               std::vector<std::string> names;
                               names.reserve(d.classes.size());
                               for (const ClassId& c : d.classes) names.push_back(to_string(c));
                               return names;
                             })
      .def("__repr__", [](const DiscriminantModel& d) {
        std::ostringstream s;
        s << "DiscriminantModel(kind=" << (d.kind == DiscriminantKind::LDA ? "lda" : "qda")
          << ", mode=" << (d.mode == LabelingMode::CropOnly ? "crop" : "joint")
          << ", classes=" << d.classes.size() << ")";
        return s.str();
      });

  m.def(
      "fit_discriminant",
      [](const Dataset& ds, const std::string& mode, const std::string& kind, double shrinkage,
         const std::string& priors) {
        return fit_discriminant(ds, mode_arg(mode), kind_arg(kind), ShrinkageParam{shrinkage},
                                priors_arg(priors));
      },
      py::arg("ds"), py::arg("mode") = "crop", py::arg("kind") = "lda",
      py::arg("shrinkage") = 0.1, py::arg("priors") = "uniform");

  m.def(
      "class_log_posteriors",
      [](const DiscriminantModel& model, const Eigen::VectorXd& x) {
        return class_log_posteriors(model, x);
      },
      py::arg("model"), py::arg("x"),
      "Log posterior per model class, in the model's class order");

  m.def(
      "joint_posteriors",
      [](const DiscriminantModel& model, const Eigen::VectorXd& x) {
        const JointPosteriorTable table = joint_posterior_table(model, x);
        Eigen::MatrixXd probs = table.probabilities;
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> support = table.support;
        return py::make_tuple(probs, support);
      },
      py::arg("model"), py::arg("x"),
      "(stage x crop probability grid, support mask) for one spectrum");

  m.def(
      "predict",
      [](const DiscriminantModel& model, const Eigen::VectorXd& x, const std::string& rule) {
        if (rule == "direct") return std::string(to_string(predict_direct(model, x)));
        if (rule == "mmp") return std::string(to_string(predict_mmp(model, x).crop));
        if (rule == "mjp") return std::string(to_string(predict_mjp(model, x).crop));
        throw UsageError("unknown rule \"" + rule + "\" (expected direct, mmp, mjp)");
      },
      py::arg("model"), py::arg("x"), py::arg("rule") = "direct",
      "Predicted crop name for one spectrum");

  py::class_<MLPModel>(m, "MLPModel")
      .def_property_readonly("bands", &MLPModel::bands)
      .def_property_readonly("epoch_losses", [](const MLPModel& d) { return d.epoch_losses; })
      .def("__repr__", [](const MLPModel& d) {
        std::ostringstream s;
        s << "MLPModel(bands=" << d.bands() << ", layers=" << d.weights.size() << ")";
        return s.str();
      });

  m.def(
      "train_mlp",
      [](const Dataset& ds, const std::vector<int>& hidden_layers, double dropout, int epochs,
         int batch_size, double learning_rate, double momentum, std::uint64_t seed) {
        MLPConfig cfg;
        cfg.hidden_layers = hidden_layers;
        cfg.dropout_rate = dropout;
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.learning_rate = learning_rate;
        cfg.momentum = momentum;
        cfg.seed = seed;
        return train_mlp(ds, cfg);
      },
      py::arg("ds"), py::arg("hidden_layers") = std::vector<int>{256}, py::arg("dropout") = 0.05,
      py::arg("epochs") = 100, py::arg("batch_size") = 32, py::arg("learning_rate") = 0.01,
      py::arg("momentum") = 0.9, py::arg("seed") = 2024);

  m.def(
      "predict_mlp",
      [](const MLPModel& model, const Eigen::VectorXd& x) {
        const MLPPrediction pred = predict_mlp(model, x);
        Eigen::VectorXd probs = pred.probabilities;
        return py::make_tuple(std::string(to_string(pred.crop)), probs);
      },
      py::arg("model"), py::arg("x"), "(crop name, per-crop probabilities)");

  m.def(
      "save_model",
      [](const py::object& model, const std::string& path) {
        if (py::isinstance<DiscriminantModel>(model))
          save_model(model.cast<const DiscriminantModel&>(), path);
        else if (py::isinstance<MLPModel>(model))
          save_model(model.cast<const MLPModel&>(), path);
        else
          throw UsageError("save_model expects a DiscriminantModel or MLPModel");
      },
      py::arg("model"), py::arg("path"));

  m.def(
      "load_model",
      [](const std::string& path) -> py::object {
        return std::visit([](auto&& model) -> py::object { return py::cast(model); },
                          load_model(path));
      },
      py::arg("path"), "Load either model type from a saved file");

  py::class_<FoldAssignment>(m, "FoldAssignment")
      .def_property_readonly("k", [](const FoldAssignment& f) { return f.k; })
      .def_property_readonly("seed", [](const FoldAssignment& f) { return f.seed; })
      .def_property_readonly("fold_of", [](const FoldAssignment& f) { return f.fold_of; });

  m.def(
      "stratified_kfold",
      [](const Dataset& ds, int k, std::uint64_t seed) { return stratified_kfold(ds, k, seed); },
      py::arg("ds"), py::arg("k") = 10, py::arg("seed") = 2024);

  m.def(
      "run_cv",
      [](const Dataset& ds, const std::string& algorithm, const FoldAssignment& folds) {
        return cv_report_to_json(run_cv(ds, parse_algorithm(algorithm), folds)).dump(2);
      },
      py::arg("ds"), py::arg("algorithm"), py::arg("folds"),
      "Cross-validate one algorithm; returns the report as a JSON string");

  m.def(
      "grid_search",
      [](const Dataset& ds, const std::string& algorithm, const FoldAssignment& folds,
         const std::optional<std::vector<double>>& grid) {
        return grid_search_to_json(grid_search_shrinkage(ds, parse_algorithm(algorithm), folds,
                                                         grid ? *grid : default_lambda_grid()))
            .dump(2);
      },
      py::arg("ds"), py::arg("algorithm"), py::arg("folds"), py::arg("grid") = std::nullopt,
      "Paired shrinkage sweep; returns the result as a JSON string");

  py::class_<PCAModel>(m, "PCAModel")
      .def_property_readonly("band_means", [](const PCAModel& p) { return p.band_means; })
      .def_property_readonly("components", [](const PCAModel& p) { return p.components; })
      .def_property_readonly("explained_variance_ratio",
                             [](const PCAModel& p) { return p.explained_variance_ratio; })
      .def("__repr__", [](const PCAModel& p) {
        std::ostringstream s;
        s << "PCAModel(components=" << p.count() << ", bands=" << p.bands() << ")";
        return s.str();
      });

  m.def(
      "fit_pca", [](const Dataset& ds, int n_components) { return fit_pca(ds, n_components); },
      py::arg("ds"), py::arg("n_components") = 2);

  m.def(
      "project",
      [](const PCAModel& model, const Dataset& ds) {
        const ScoreTable table = project(model, ds);
        std::vector<std::string> crops, stages;
        crops.reserve(table.crops.size());
        stages.reserve(table.stages.size());
        for (CropLabel c : table.crops) crops.emplace_back(to_string(c));
        for (StageLabel s : table.stages) stages.emplace_back(to_string(s));
        return py::make_tuple(table.scores, crops, stages);
      },
      py::arg("model"), py::arg("ds"), "(scores matrix, crop names, stage names)");

  m.def(
      "emit_scatter",
      [](const PCAModel& model, const Dataset& ds, const std::string& out_dir,
         const std::string& group_by) {
        ScatterGroup group;
        if (group_by == "crop")
          group = ScatterGroup::Crop;
        else if (group_by == "stage")
          group = ScatterGroup::Stage;
        else
          throw UsageError("unknown group_by \"" + group_by + "\" (expected crop or stage)");
        return emit_scatter(project(model, ds), group, out_dir);
      },
      py::arg("model"), py::arg("ds"), py::arg("out_dir"), py::arg("group_by") = "crop",
      "Write scores.csv plus one scatter figure per group; returns the paths");
}

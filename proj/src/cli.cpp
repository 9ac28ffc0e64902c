#include "cropspec/cli.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cropspec/analysis.hpp"
#include "cropspec/classify.hpp"
#include "cropspec/dataset.hpp"
#include "cropspec/errors.hpp"
#include "cropspec/eval.hpp"
#include "cropspec/mlp.hpp"
#include "cropspec/model_io.hpp"
#include "cropspec/util.hpp"

namespace cropspec {

namespace {

namespace fs = std::filesystem;

IngestConfig resolve_profile(const std::string& profile_path) {
  if (profile_path.empty()) return canonical_ingest_config();
  return load_ingest_config(profile_path);
}

Dataset load_data(const std::string& data_path, const std::string& profile_path) {
  if (data_path.empty()) throw UsageError("a dataset path is required (--data)");
  return load_library(data_path, resolve_profile(profile_path));
}

fs::path ensure_out_dir(const std::string& out_dir) {
  if (out_dir.empty()) throw UsageError("an output directory is required (--out)");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory " + out_dir + ": " + ec.message());
  return fs::path(out_dir);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw DataError("failed while writing " + path.string());
}

// "lda-mmp(0.5)" -> "lda-mmp_0.5", safe as a file-name fragment.
std::string file_token(const std::string& name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '.' || c == '-' || c == '_')
      out += c;
    else if (c == '(')
      out += '_';
  }
  return out;
}

PriorMode parse_priors(const std::string& text) {
  const std::string s = to_lower(trim(text));
  if (s == "uniform") return PriorMode::Uniform;
  if (s == "empirical") return PriorMode::Empirical;
  throw UsageError("unknown priors \"" + text + "\" (expected uniform or empirical)");
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  for (const std::string& piece : split(text, ',')) {
    const std::optional<double> v = parse_double(trim(piece));
    if (!v) throw UsageError("bad shrinkage grid entry \"" + piece + "\"");
    grid.push_back(*v);
  }
  return grid;
}

// Options shared by the data-consuming commands.
struct CommonOpts {
  std::string data;
  std::string profile;
  std::string out_dir;
  int folds = 10;
  std::uint64_t seed = 2024;
  double lambda = 0.1;
  bool lambda_given = false;
  std::string priors = "uniform";
};

void add_data_options(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--data", opts.data, "Library file to load");
  cmd->add_option("--profile", opts.profile, "Ingest profile (key=value file); canonical layout assumed when absent");
}

int cmd_validate(const CommonOpts& opts, bool announce, std::ostream& out) {
  const Dataset ds = load_data(opts.data, opts.profile);
  out << render_summary(summarize(ds));
  if (announce) out << "dataset valid: " << opts.data << "\n";
  return 0;
}

int cmd_cv(const CommonOpts& opts, const std::string& algorithms, std::ostream& out) {
  const Dataset ds = load_data(opts.data, opts.profile);
  const fs::path dir = ensure_out_dir(opts.out_dir);
  const FoldAssignment folds = stratified_kfold(ds, opts.folds, opts.seed);

  std::vector<CVReport> reports;
  for (const std::string& piece : split(algorithms, ',')) {
    const std::string text{trim(piece)};
    if (text.empty()) continue;
    AlgorithmSpec spec = parse_algorithm(text);
    if (spec.family != ModelFamily::MLP) {
      if (opts.lambda_given && text.find('(') == std::string::npos)
        spec.lambda.lambda = opts.lambda;
      spec.priors = parse_priors(opts.priors);
    }
    spec.mlp.seed = opts.seed;
    const CVReport report = run_cv(ds, spec, folds);
    const fs::path report_path = dir / ("report_" + file_token(report.algorithm) + ".json");
    write_file(report_path, cv_report_to_json(report).dump(2) + "\n");
    out << "wrote " << report_path.string() << "\n";
    reports.push_back(report);
  }
  if (reports.empty()) throw UsageError("no algorithms requested");

  const fs::path table_path = dir / "accuracy_table.txt";
  write_file(table_path, render_accuracy_table(reports));
  out << "wrote " << table_path.string() << "\n\n";
  out << render_accuracy_table(reports);
  return 0;
}

int cmd_grid(const CommonOpts& opts, const std::string& algorithm, const std::string& grid_text,
             std::ostream& out) {
  const Dataset ds = load_data(opts.data, opts.profile);
  const fs::path dir = ensure_out_dir(opts.out_dir);
  AlgorithmSpec base = parse_algorithm(algorithm);
  base.priors = parse_priors(opts.priors);
  const FoldAssignment folds = stratified_kfold(ds, opts.folds, opts.seed);
  const std::vector<double> grid =
      grid_text.empty() ? default_lambda_grid() : parse_grid(grid_text);

  const GridSearchResult result = grid_search_shrinkage(ds, base, folds, grid);
  const fs::path path = dir / ("grid_" + file_token(algorithm) + ".json");
  write_file(path, grid_search_to_json(result).dump(2) + "\n");
  out << "wrote " << path.string() << "\n";
  for (std::size_t i = 0; i < result.lambdas.size(); ++i)
    out << "lambda " << format_double(result.lambdas[i]) << ": mean accuracy "
        << format_double(result.reports[i].mean_accuracy) << "\n";
  out << "best lambda: " << format_double(result.best_lambda()) << " (mean accuracy "
      << format_double(result.best_report().mean_accuracy) << ")\n";
  return 0;
}

int cmd_pca(const CommonOpts& opts, int components, const std::string& group_by,
            std::ostream& out) {
  const Dataset ds = load_data(opts.data, opts.profile);
  const fs::path dir = ensure_out_dir(opts.out_dir);

  const PCAModel model = fit_pca(ds, components);
  const ScoreTable table = project(model, ds);

  nlohmann::ordered_json j;
  j["schema"] = "cropspec.pca_variance.v1";
  j["components"] = components;
  std::vector<double> ratios(model.explained_variance_ratio.data(),
                             model.explained_variance_ratio.data() + components);
  j["explained_variance_ratio"] = ratios;
  const fs::path variance_path = dir / "pca_variance.json";
  write_file(variance_path, j.dump(2) + "\n");
  out << "wrote " << variance_path.string() << "\n";

  ScatterGroup group = ScatterGroup::Crop;
  const std::string g = to_lower(trim(group_by));
  if (g == "stage")
    group = ScatterGroup::Stage;
  else if (g != "crop")
    throw UsageError("unknown group-by \"" + group_by + "\" (expected crop or stage)");
  for (const std::string& path : emit_scatter(table, group, dir.string()))
    out << "wrote " << path << "\n";

  out << "explained variance ratios:";
  for (double r : ratios) out << ' ' << format_double(r);
  out << "\n";
  return 0;
}

int cmd_train(const CommonOpts& opts, const std::string& kind, const std::string& mode,
              const MLPConfig& mlp_base, std::ostream& out) {
  const Dataset ds = load_data(opts.data, opts.profile);
  const fs::path dir = ensure_out_dir(opts.out_dir);
  const std::string k = to_lower(trim(kind));
  const std::string m = to_lower(trim(mode));
  if (m != "crop" && m != "joint")
    throw UsageError("unknown mode \"" + mode + "\" (expected crop or joint)");

  fs::path model_path = dir / ("model_" + file_token(k) + ".txt");
  if (k == "lda" || k == "qda") {
    const DiscriminantModel model = fit_discriminant(
        ds, m == "crop" ? LabelingMode::CropOnly : LabelingMode::JointCropStage,
        k == "lda" ? DiscriminantKind::LDA : DiscriminantKind::QDA,
        ShrinkageParam{opts.lambda}, parse_priors(opts.priors));
    save_model(model, model_path.string());
    out << "wrote " << model_path.string() << " (" << model.classes.size() << " classes)\n";
  } else if (k == "mlp1" || k == "mlp2") {
    if (m == "joint")
      throw UsageError("the network predicts crops only; train it with --mode crop");
    MLPConfig cfg = mlp_base;
    cfg.hidden_layers.assign(k == "mlp1" ? 1 : 2, cfg.hidden_layers.at(0));
    cfg.seed = opts.seed;
    const MLPModel model = train_mlp(ds, cfg);
    save_model(model, model_path.string());
    out << "wrote " << model_path.string() << " (final epoch loss "
        << format_double(model.epoch_losses.back()) << ")\n";
  } else {
    throw UsageError("unknown kind \"" + kind + "\" (expected lda, qda, mlp1, mlp2)");
  }
  return 0;
}

nlohmann::ordered_json posterior_record(long index, const JointPosteriorTable& table,
                                        CropLabel predicted) {
  nlohmann::ordered_json rec;
  rec["record_index"] = index;
  rec["predicted_crop"] = to_string(predicted);
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  nlohmann::ordered_json support = nlohmann::ordered_json::array();
  for (int s = 0; s < kNumStages; ++s) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    nlohmann::ordered_json srow = nlohmann::ordered_json::array();
    for (int c = 0; c < kNumCrops; ++c) {
      row.push_back(table.probabilities(s, c));
      srow.push_back(table.support(s, c));
    }
    rows.push_back(std::move(row));
    support.push_back(std::move(srow));
  }
  rec["probabilities"] = std::move(rows);
  rec["support"] = std::move(support);
  return rec;
}

int cmd_predict(const CommonOpts& opts, const std::string& model_path, const std::string& rule,
                std::ostream& out) {
  if (model_path.empty()) throw UsageError("a model file is required (--model)");
  const Dataset ds = load_data(opts.data, opts.profile);
  const fs::path dir = ensure_out_dir(opts.out_dir);
  const AnyModel model = load_model(model_path);
  const std::string r = to_lower(trim(rule));

  std::vector<CropLabel> predicted(static_cast<std::size_t>(ds.size()));
  nlohmann::ordered_json posterior_records = nlohmann::ordered_json::array();
  bool joint = false;

  if (const auto* dm = std::get_if<DiscriminantModel>(&model)) {
    if (ds.bands() != dm->bands())
      throw DataError("dataset has " + std::to_string(ds.bands()) + " bands, model has " +
                      std::to_string(dm->bands()));
    joint = dm->mode == LabelingMode::JointCropStage;
    if (r != "direct" && r != "mmp" && r != "mjp")
      throw UsageError("unknown rule \"" + rule + "\" (expected direct, mmp, mjp)");
    if (joint && r == "direct")
      throw UsageError("a joint model needs --rule mmp or mjp");
    if (!joint && r != "direct")
      throw UsageError("a crop-only model supports --rule direct only");
    for (long i = 0; i < ds.size(); ++i) {
      const Eigen::VectorXd& x = ds.records[static_cast<std::size_t>(i)].reflectance;
      if (!joint) {
        predicted[static_cast<std::size_t>(i)] = predict_direct(*dm, x);
        continue;
      }
      predicted[static_cast<std::size_t>(i)] =
          r == "mmp" ? predict_mmp(*dm, x).crop : predict_mjp(*dm, x).crop;
      posterior_records.push_back(
          posterior_record(i, joint_posterior_table(*dm, x), predicted[static_cast<std::size_t>(i)]));
    }
  } else {
    const MLPModel& nm = std::get<MLPModel>(model);
    if (r != "direct") throw UsageError("the network model supports --rule direct only");
    for (long i = 0; i < ds.size(); ++i)
      predicted[static_cast<std::size_t>(i)] =
          predict_mlp(nm, ds.records[static_cast<std::size_t>(i)].reflectance).crop;
  }

  std::ostringstream csv;
  csv << "record_index,true_crop,true_stage,predicted_crop\n";
  long correct = 0;
  for (long i = 0; i < ds.size(); ++i) {
    const SampleRecord& rec = ds.records[static_cast<std::size_t>(i)];
    if (rec.crop == predicted[static_cast<std::size_t>(i)]) ++correct;
    csv << i << ',' << to_string(rec.crop) << ',' << to_string(rec.stage) << ','
        << to_string(predicted[static_cast<std::size_t>(i)]) << "\n";
  }
  const fs::path csv_path = dir / "predictions.csv";
  write_file(csv_path, csv.str());
  out << "wrote " << csv_path.string() << "\n";

  if (joint) {
    nlohmann::ordered_json j;
    j["schema"] = "cropspec.posteriors.v1";
    j["rule"] = r;
    nlohmann::ordered_json stages = nlohmann::ordered_json::array();
    for (StageLabel s : all_stages()) stages.push_back(to_string(s));
    nlohmann::ordered_json crops = nlohmann::ordered_json::array();
    for (CropLabel c : all_crops()) crops.push_back(to_string(c));
    j["stages"] = std::move(stages);
    j["crops"] = std::move(crops);
    j["records"] = std::move(posterior_records);
    const fs::path post_path = dir / "posteriors.json";
    write_file(post_path, j.dump(2) + "\n");
    out << "wrote " << post_path.string() << "\n";
  }

  out << "accuracy " << correct << "/" << ds.size() << " ("
      << format_double(static_cast<double>(correct) / static_cast<double>(ds.size())) << ")\n";
  return 0;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir, const std::string& name,
              std::uint64_t seed, std::ostream& out) {
  if (spec_path.empty()) throw UsageError("a generator spec is required (--spec)");
  const fs::path dir = ensure_out_dir(out_dir);
  const SyntheticSpec spec = load_synthetic_spec(spec_path);
  const Dataset ds = synthesize(spec, seed);
  const fs::path path = dir / name;
  write_library(ds, path);
  out << "wrote " << path.string() << " (" << ds.size() << " records, " << ds.bands()
      << " bands)\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"spectral-library crop classification toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a key=value file (flags override)");

  CommonOpts opts;
  std::string algorithms = "lda,lda-mmp,lda-mjp,qda,qda-mmp,qda-mjp,mlp1,mlp2";
  std::string algorithm = "qda-mmp";
  std::string grid_text;
  int components = 4;
  std::string group_by = "crop";
  std::string kind = "lda";
  std::string mode = "crop";
  std::string model_path;
  std::string rule = "direct";
  std::string spec_path;
  std::string synth_name = "library.csv";
  MLPConfig mlp_base;

  CLI::App* validate_cmd = app.add_subcommand("validate", "Load a library file, report schema problems or print a summary");
  add_data_options(validate_cmd, opts);

  CLI::App* summarize_cmd = app.add_subcommand("summarize", "Print record/band/label counts for a library file");
  add_data_options(summarize_cmd, opts);

  CLI::App* cv_cmd = app.add_subcommand("cv", "Cross-validate one or more algorithms with a shared fold assignment");
  add_data_options(cv_cmd, opts);
  cv_cmd->add_option("--out", opts.out_dir, "Output directory");
  cv_cmd->add_option("--algorithms", algorithms, "Comma-separated algorithm list");
  cv_cmd->add_option("-k,--folds", opts.folds, "Fold count");
  cv_cmd->add_option("--seed", opts.seed, "Fold/shuffle seed");
  cv_cmd->add_option("--lambda", opts.lambda, "Shrinkage for discriminant algorithms without an explicit value")
      ->check(CLI::Range(0.0, 1.0));
  cv_cmd->add_option("--priors", opts.priors, "uniform or empirical");

  CLI::App* grid_cmd = app.add_subcommand("grid", "Sweep the shrinkage parameter for one algorithm");
  add_data_options(grid_cmd, opts);
  grid_cmd->add_option("--out", opts.out_dir, "Output directory");
  grid_cmd->add_option("--algorithm", algorithm, "Algorithm to sweep");
  grid_cmd->add_option("-k,--folds", opts.folds, "Fold count");
  grid_cmd->add_option("--seed", opts.seed, "Fold/shuffle seed");
  grid_cmd->add_option("--grid", grid_text, "Comma-separated shrinkage values (default sweep otherwise)");
  grid_cmd->add_option("--priors", opts.priors, "uniform or empirical");

  CLI::App* pca_cmd = app.add_subcommand("pca", "Principal components, score file, and scatter figures");
  add_data_options(pca_cmd, opts);
  pca_cmd->add_option("--out", opts.out_dir, "Output directory");
  pca_cmd->add_option("--components", components, "Component count")->check(CLI::PositiveNumber);
  pca_cmd->add_option("--group-by", group_by, "One figure per crop or per stage");

  CLI::App* train_cmd = app.add_subcommand("train", "Fit a model on a library file and save it");
  add_data_options(train_cmd, opts);
  train_cmd->add_option("--out", opts.out_dir, "Output directory");
  train_cmd->add_option("--kind", kind, "lda, qda, mlp1, mlp2");
  train_cmd->add_option("--mode", mode, "crop or joint class labels");
  train_cmd->add_option("--lambda", opts.lambda, "Shrinkage (discriminant kinds)")
      ->check(CLI::Range(0.0, 1.0));
  train_cmd->add_option("--priors", opts.priors, "uniform or empirical");
  train_cmd->add_option("--seed", opts.seed, "Network init/shuffle seed");
  train_cmd->add_option("--epochs", mlp_base.epochs, "Network training epochs")->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch-size", mlp_base.batch_size, "Network batch size")->check(CLI::PositiveNumber);
  train_cmd->add_option("--learning-rate", mlp_base.learning_rate, "Network learning rate");
  train_cmd->add_option("--momentum", mlp_base.momentum, "Network momentum");
  train_cmd->add_option("--dropout", mlp_base.dropout_rate, "Network dropout rate");
  train_cmd->add_option("--hidden", mlp_base.hidden_layers.at(0), "Hidden layer width");

  CLI::App* predict_cmd = app.add_subcommand("predict", "Predict crops for a library file with a saved model");
  add_data_options(predict_cmd, opts);
  predict_cmd->add_option("--out", opts.out_dir, "Output directory");
  predict_cmd->add_option("--model", model_path, "Model file from the train command");
  predict_cmd->add_option("--rule", rule, "direct, mmp, or mjp");

  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a library file from a JSON generator spec");
  synth_cmd->add_option("--spec", spec_path, "Generator spec (JSON)");
  synth_cmd->add_option("--out", opts.out_dir, "Output directory");
  synth_cmd->add_option("--name", synth_name, "Output file name");
  synth_cmd->add_option("--seed", opts.seed, "Sampling seed");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    opts.lambda_given = cv_cmd->count("--lambda") > 0;
    if (validate_cmd->parsed()) return cmd_validate(opts, true, out);
    if (summarize_cmd->parsed()) return cmd_validate(opts, false, out);
    if (cv_cmd->parsed()) return cmd_cv(opts, algorithms, out);
    if (grid_cmd->parsed()) return cmd_grid(opts, algorithm, grid_text, out);
    if (pca_cmd->parsed()) return cmd_pca(opts, components, group_by, out);
    if (train_cmd->parsed()) return cmd_train(opts, kind, mode, mlp_base, out);
    if (predict_cmd->parsed()) return cmd_predict(opts, model_path, rule, out);
    if (synth_cmd->parsed()) return cmd_synth(spec_path, opts.out_dir, synth_name, opts.seed, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace cropspec

#include "cropspec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "cropspec/errors.hpp"
#include "cropspec/rng.hpp"
#include "cropspec/util.hpp"

namespace cropspec {

namespace {

Dataset subset(const Dataset& ds, const std::vector<long>& indices) {
  Dataset out;
  out.grid = ds.grid;
  out.records.reserve(indices.size());
  for (long i : indices) out.records.push_back(ds.records[static_cast<std::size_t>(i)]);
  return out;
}

void check_folds(const Dataset& ds, const FoldAssignment& folds) {
  if (folds.k < 2) throw UsageError("cross-validation needs at least 2 folds");
  if (static_cast<long>(folds.fold_of.size()) != ds.size())
    throw DataError("fold assignment covers " + std::to_string(folds.fold_of.size()) +
                    " records, dataset has " + std::to_string(ds.size()));
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", fraction * 100.0);
  return buf;
}

}  // namespace

std::vector<long> FoldAssignment::test_indices(int fold) const {
  std::vector<long> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] == fold) out.push_back(static_cast<long>(i));
  return out;
}

std::vector<long> FoldAssignment::train_indices(int fold) const {
  std::vector<long> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] != fold) out.push_back(static_cast<long>(i));
  return out;
}

FoldAssignment stratified_kfold(const Dataset& ds, int k, std::uint64_t seed) {
  if (k < 2) throw UsageError("stratified k-fold needs at least 2 folds");
  validate(ds);
  FoldAssignment fa;
  fa.k = k;
  fa.seed = seed;
  fa.fold_of.assign(static_cast<std::size_t>(ds.size()), -1);
  Rng rng(seed);
  for (CropLabel crop : all_crops()) {
    std::vector<long> idx;
    for (long i = 0; i < ds.size(); ++i)
      if (ds.records[static_cast<std::size_t>(i)].crop == crop) idx.push_back(i);
    if (idx.empty()) continue;
    if (static_cast<int>(idx.size()) < k)
      throw DataError("crop " + std::string(to_string(crop)) + " has " +
                      std::to_string(idx.size()) +
                      " records; stratified " + std::to_string(k) +
                      "-fold needs at least one per fold");
    rng.shuffle(idx);
    for (std::size_t j = 0; j < idx.size(); ++j)
      fa.fold_of[static_cast<std::size_t>(idx[j])] = static_cast<int>(j % static_cast<std::size_t>(k));
  }
  return fa;
}

std::string AlgorithmSpec::name() const {
  if (family == ModelFamily::MLP)
    return mlp.hidden_layers.size() == 1 ? "mlp1" : "mlp2";
  std::string base = family == ModelFamily::LDA ? "lda" : "qda";
  if (decision == DecisionRule::MMP) base += "-mmp";
  if (decision == DecisionRule::MJP) base += "-mjp";
  return base + "(" + format_double(lambda.lambda) + ")";
}

AlgorithmSpec parse_algorithm(const std::string& text) {
  std::string s = to_lower(trim(text));
  AlgorithmSpec spec;

  const auto paren = s.find('(');
  if (paren != std::string::npos) {
    if (s.back() != ')')
      throw UsageError("algorithm \"" + text + "\": unbalanced parenthesis");
    const std::string inner = s.substr(paren + 1, s.size() - paren - 2);
    const std::optional<double> value = parse_double(inner);
    if (!value)
      throw UsageError("algorithm \"" + text + "\": bad shrinkage value \"" + inner + "\"");
    spec.lambda.lambda = *value;
    s = s.substr(0, paren);
  }

  if (s == "mlp1" || s == "mlp2") {
    if (paren != std::string::npos)
      throw UsageError("algorithm \"" + text + "\": the network takes no shrinkage value");
    spec.family = ModelFamily::MLP;
    spec.mlp.hidden_layers.assign(s == "mlp1" ? 1 : 2, 256);
    return spec;
  }

  if (s.rfind("lda", 0) == 0)
    spec.family = ModelFamily::LDA;
  else if (s.rfind("qda", 0) == 0)
    spec.family = ModelFamily::QDA;
  else
    throw UsageError("unknown algorithm \"" + text +
                     "\" (expected lda, qda, lda-mmp, lda-mjp, qda-mmp, qda-mjp, mlp1, mlp2)");

  const std::string rest = s.substr(3);
  if (rest.empty())
    spec.decision = DecisionRule::Direct;
  else if (rest == "-mmp")
    spec.decision = DecisionRule::MMP;
  else if (rest == "-mjp")
    spec.decision = DecisionRule::MJP;
  else
    throw UsageError("unknown algorithm \"" + text +
                     "\" (expected lda, qda, lda-mmp, lda-mjp, qda-mmp, qda-mjp, mlp1, mlp2)");
  validate(spec.lambda);
  return spec;
}

CVReport run_cv(const Dataset& ds, const AlgorithmSpec& spec, const FoldAssignment& folds) {
  check_folds(ds, folds);
  if (spec.family != ModelFamily::MLP) validate(spec.lambda);

  CVReport report;
  report.algorithm = spec.name();
  report.k = folds.k;
  report.seed = folds.seed;

  for (int f = 0; f < folds.k; ++f) {
    const std::vector<long> train_idx = folds.train_indices(f);
    const std::vector<long> test_idx = folds.test_indices(f);
    if (test_idx.empty())
      throw DataError("fold " + std::to_string(f) + " has no test records");
    const Dataset train = subset(ds, train_idx);

    std::vector<CropLabel> predicted(test_idx.size());
    if (spec.family == ModelFamily::MLP) {
      MLPConfig cfg = spec.mlp;
      cfg.seed = spec.mlp.seed + static_cast<std::uint64_t>(f);
      const MLPModel model = train_mlp(train, cfg);
      for (std::size_t i = 0; i < test_idx.size(); ++i)
        predicted[i] =
            predict_mlp(model, ds.records[static_cast<std::size_t>(test_idx[i])].reflectance).crop;
    } else {
      const DiscriminantKind kind =
          spec.family == ModelFamily::LDA ? DiscriminantKind::LDA : DiscriminantKind::QDA;
      const LabelingMode mode = spec.decision == DecisionRule::Direct
                                    ? LabelingMode::CropOnly
                                    : LabelingMode::JointCropStage;
      const DiscriminantModel model = fit_discriminant(train, mode, kind, spec.lambda, spec.priors);
      for (std::size_t i = 0; i < test_idx.size(); ++i) {
        const Eigen::VectorXd& x = ds.records[static_cast<std::size_t>(test_idx[i])].reflectance;
        switch (spec.decision) {
          case DecisionRule::Direct: predicted[i] = predict_direct(model, x); break;
          case DecisionRule::MMP: predicted[i] = predict_mmp(model, x).crop; break;
          case DecisionRule::MJP: predicted[i] = predict_mjp(model, x).crop; break;
        }
      }
    }

    long correct = 0;
    for (std::size_t i = 0; i < test_idx.size(); ++i) {
      const CropLabel truth = ds.records[static_cast<std::size_t>(test_idx[i])].crop;
      if (predicted[i] == truth) ++correct;
      report.confusion(static_cast<int>(truth), static_cast<int>(predicted[i])) += 1;
    }
    report.fold_accuracies.push_back(static_cast<double>(correct) /
                                     static_cast<double>(test_idx.size()));
  }

  const double n = static_cast<double>(report.fold_accuracies.size());
  double sum = 0.0;
  for (double a : report.fold_accuracies) sum += a;
  report.mean_accuracy = sum / n;
  double sq = 0.0;
  for (double a : report.fold_accuracies) {
    const double d = a - report.mean_accuracy;
    sq += d * d;
  }
  report.std_accuracy = std::sqrt(sq / n);
  report.interval_low = report.mean_accuracy - 2.0 * report.std_accuracy;
  report.interval_high = report.mean_accuracy + 2.0 * report.std_accuracy;
  return report;
}

std::vector<double> default_lambda_grid() {
  return {0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
}

GridSearchResult grid_search_shrinkage(const Dataset& ds, const AlgorithmSpec& base,
                                       const FoldAssignment& folds,
                                       const std::vector<double>& grid) {
  if (base.family == ModelFamily::MLP)
    throw UsageError("shrinkage search applies to the discriminant families, not the network");
  if (grid.empty()) throw UsageError("shrinkage search needs a non-empty grid");
  for (double l : grid) validate(ShrinkageParam{l});

  GridSearchResult result;
  for (double l : grid) {
    AlgorithmSpec spec = base;
    spec.lambda.lambda = l;
    result.lambdas.push_back(l);
    result.reports.push_back(run_cv(ds, spec, folds));
  }
  result.best_index = 0;
  for (std::size_t i = 1; i < result.reports.size(); ++i) {
    const bool better =
        result.reports[i].mean_accuracy > result.reports[result.best_index].mean_accuracy;
    const bool tie_smaller =
        result.reports[i].mean_accuracy == result.reports[result.best_index].mean_accuracy &&
        result.lambdas[i] < result.lambdas[result.best_index];
    if (better || tie_smaller) result.best_index = i;
  }
  return result;
}

std::string render_confusion(const CVReport& report) {
  std::ostringstream out;
  out << "Pooled confusion matrix for " << report.algorithm << " (rows: true crop)\n";

  std::vector<std::string> names;
  std::size_t widest = 0;
  for (CropLabel c : all_crops()) {
    names.emplace_back(to_string(c));
    widest = std::max(widest, names.back().size());
  }
  const int label_w = static_cast<int>(widest) + 2;
  const int cell_w = 13;

  out << std::string(static_cast<std::size_t>(label_w), ' ');
  for (const std::string& name : names) {
    out << name << std::string(static_cast<std::size_t>(cell_w) - name.size(), ' ');
  }
  out << "recall\n";

  Eigen::Matrix<std::int64_t, 1, kNumCrops> column_sums =
      report.confusion.colwise().sum();
  for (int r = 0; r < kNumCrops; ++r) {
    out << names[static_cast<std::size_t>(r)]
        << std::string(static_cast<std::size_t>(label_w) - names[static_cast<std::size_t>(r)].size(),
                       ' ');
    std::int64_t row_sum = 0;
    for (int c = 0; c < kNumCrops; ++c) row_sum += report.confusion(r, c);
    for (int c = 0; c < kNumCrops; ++c) {
      const std::string cell = std::to_string(report.confusion(r, c));
      out << cell << std::string(static_cast<std::size_t>(cell_w) - cell.size(), ' ');
    }
    if (row_sum > 0)
      out << percent(static_cast<double>(report.confusion(r, r)) / static_cast<double>(row_sum))
          << "%";
    else
      out << "-";
    out << "\n";
  }

  out << "precision" << std::string(static_cast<std::size_t>(label_w) - 9, ' ');
  for (int c = 0; c < kNumCrops; ++c) {
    std::string cell;
    if (column_sums(0, c) > 0)
      cell = percent(static_cast<double>(report.confusion(c, c)) /
                     static_cast<double>(column_sums(0, c))) +
             "%";
    else
      cell = "-";
    out << cell << std::string(static_cast<std::size_t>(cell_w) - cell.size(), ' ');
  }
  out << "\n";
  return out.str();
}

std::string render_accuracy_table(const std::vector<CVReport>& reports) {
  std::size_t name_w = std::string("algorithm").size();
  for (const CVReport& r : reports) name_w = std::max(name_w, r.algorithm.size());

  std::ostringstream out;
  out << "algorithm" << std::string(name_w - 9 + 2, ' ') << "mean acc %  interval (mean +/- 2 sd)\n";
  for (const CVReport& r : reports) {
    out << r.algorithm << std::string(name_w - r.algorithm.size() + 2, ' ');
    const std::string mean = percent(r.mean_accuracy);
    out << mean << std::string(12 - mean.size(), ' ');
    out << "[" << percent(r.interval_low) << ", " << percent(r.interval_high) << "]\n";
  }
  return out.str();
}

nlohmann::ordered_json cv_report_to_json(const CVReport& report) {
  nlohmann::ordered_json j;
  j["schema"] = "cropspec.cv_report.v1";
  j["algorithm"] = report.algorithm;
  j["folds"] = report.k;
  j["seed"] = report.seed;
  j["fold_accuracies"] = report.fold_accuracies;
  j["mean_accuracy"] = report.mean_accuracy;
  j["std_accuracy"] = report.std_accuracy;
  j["interval"] = {report.interval_low, report.interval_high};
  nlohmann::ordered_json labels = nlohmann::ordered_json::array();
  for (CropLabel c : all_crops()) labels.push_back(to_string(c));
  j["crops"] = labels;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (int r = 0; r < kNumCrops; ++r) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (int c = 0; c < kNumCrops; ++c) row.push_back(report.confusion(r, c));
    rows.push_back(std::move(row));
  }
  j["confusion"] = std::move(rows);
  return j;
}

nlohmann::ordered_json grid_search_to_json(const GridSearchResult& result) {
  nlohmann::ordered_json j;
  j["schema"] = "cropspec.grid_search.v1";
  j["lambdas"] = result.lambdas;
  j["best_lambda"] = result.best_lambda();
  nlohmann::ordered_json means = nlohmann::ordered_json::array();
  for (const CVReport& r : result.reports) means.push_back(r.mean_accuracy);
  j["mean_accuracies"] = std::move(means);
  nlohmann::ordered_json reports = nlohmann::ordered_json::array();
  for (const CVReport& r : result.reports) reports.push_back(cv_report_to_json(r));
  j["reports"] = std::move(reports);
  return j;
}

}  // namespace cropspec

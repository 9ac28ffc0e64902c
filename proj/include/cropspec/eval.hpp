#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cropspec/classify.hpp"
#include "cropspec/mlp.hpp"
#include "cropspec/types.hpp"

namespace cropspec {

// Record-to-fold map produced by stratified splitting. Every record belongs
// to exactly one fold.
struct FoldAssignment {
  int k = 10;
  std::uint64_t seed = 0;
  std::vector<int> fold_of;  // fold index per record, in dataset order

  std::vector<long> test_indices(int fold) const;
  std::vector<long> train_indices(int fold) const;
};

// Shuffles each crop's records independently (crops visited in alphabetical
// order, one seeded generator) and deals them round-robin across folds, so
// per-crop counts differ by at most one between folds. Throws UsageError for
// k < 2 and DataError when a crop present in the data has fewer than k
// records.
FoldAssignment stratified_kfold(const Dataset& ds, int k, std::uint64_t seed);

enum class ModelFamily { LDA, QDA, MLP };
enum class DecisionRule { Direct, MMP, MJP };

// One evaluated configuration: model family plus how a crop decision is read
// off the model. Direct fits on crop labels alone; MMP and MJP fit on joint
// crop-stage labels and reduce the joint posterior. The network settings only
// matter for the MLP family, the shrinkage and priors only for LDA/QDA.
struct AlgorithmSpec {
  ModelFamily family = ModelFamily::LDA;
  DecisionRule decision = DecisionRule::Direct;
  ShrinkageParam lambda{0.1};
  PriorMode priors = PriorMode::Uniform;
  MLPConfig mlp{};

  // Canonical display name: "lda(0.1)", "qda-mjp(0.5)", "mlp1", "mlp2".
  std::string name() const;
};

// Parses "lda", "qda", "lda-mmp", "lda-mjp", "qda-mmp", "qda-mjp", "mlp1",
// "mlp2", case-insensitively, with an optional "(<lambda>)" suffix on the
// discriminant families. Throws UsageError on anything else.
AlgorithmSpec parse_algorithm(const std::string& text);

// Cross-validation outcome. Accuracies are crop-level fractions in [0, 1];
// the interval is mean plus/minus two population standard deviations of the
// per-fold accuracies. The confusion matrix pools all folds' test
// predictions, rows indexed by true crop and columns by predicted crop.
struct CVReport {
  std::string algorithm;
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<double> fold_accuracies;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  double interval_low = 0.0;
  double interval_high = 0.0;
  Eigen::Matrix<std::int64_t, kNumCrops, kNumCrops> confusion =
      Eigen::Matrix<std::int64_t, kNumCrops, kNumCrops>::Zero();
};

// Trains on k-1 folds and scores the held-out fold, for every fold. Models
// are refit from scratch per fold; the network seed is offset by the fold
// index so folds do not share an initialization.
CVReport run_cv(const Dataset& ds, const AlgorithmSpec& spec, const FoldAssignment& folds);

// Shrinkage values swept by default: 0.01, 0.05, then 0.1 through 1.0 in
// steps of 0.1.
std::vector<double> default_lambda_grid();

// Paired sweep over shrinkage values: every lambda is evaluated on the same
// fold assignment, so accuracy differences are attributable to lambda alone.
struct GridSearchResult {
  std::vector<double> lambdas;
  std::vector<CVReport> reports;  // one per lambda, same order
  std::size_t best_index = 0;

  double best_lambda() const { return lambdas.at(best_index); }
  const CVReport& best_report() const { return reports.at(best_index); }
};

// Picks the lambda with the highest mean accuracy; exact ties go to the
// smallest lambda. Throws UsageError on an empty or out-of-range grid.
GridSearchResult grid_search_shrinkage(const Dataset& ds, const AlgorithmSpec& base,
                                       const FoldAssignment& folds,
                                       const std::vector<double>& grid = default_lambda_grid());

// Text table of the pooled confusion matrix with per-crop recall and
// precision.
std::string render_confusion(const CVReport& report);

// Text table over several runs: algorithm name, mean accuracy (percent), and
// the two-standard-deviation interval.
std::string render_accuracy_table(const std::vector<CVReport>& reports);

// Stable JSON forms (insertion-ordered keys, shortest round-trip numbers) so
// repeated runs serialize byte-identically.
nlohmann::ordered_json cv_report_to_json(const CVReport& report);
nlohmann::ordered_json grid_search_to_json(const GridSearchResult& result);

}  // namespace cropspec

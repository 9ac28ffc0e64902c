#include "cropspec/classify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "cropspec/errors.hpp"

namespace cropspec {

namespace {

void require_mode(const DiscriminantModel& m, LabelingMode mode, const char* op) {
  if (m.mode != mode)
    throw UsageError(std::string(op) + " requires a " +
                     (mode == LabelingMode::JointCropStage ? "joint crop-stage" : "crop-only") +
                     " model");
}

void require_bands(const DiscriminantModel& m, long got) {
  if (got != m.bands())
    throw DataError("input has " + std::to_string(got) + " bands, model has " +
                    std::to_string(m.bands()));
}

}  // namespace

DiscriminantModel fit_discriminant(const Dataset& ds, LabelingMode mode, DiscriminantKind kind,
                                   ShrinkageParam lambda, PriorMode priors) {
  validate(lambda);
  validate(ds);

  // Group record indices by class; std::map keeps the canonical class order.
  std::map<ClassId, std::vector<long>> groups;
  for (long i = 0; i < ds.size(); ++i) {
    const SampleRecord& rec = ds.records[static_cast<std::size_t>(i)];
    ClassId id{rec.crop, mode == LabelingMode::JointCropStage
                             ? std::optional<StageLabel>(rec.stage)
                             : std::nullopt};
    groups[id].push_back(i);
  }
  for (const auto& [id, indices] : groups)
    if (indices.size() < 2)
      throw DataError("class " + to_string(id) + " has " + std::to_string(indices.size()) +
                      " sample(s); at least 2 are required");

  DiscriminantModel m;
  m.mode = mode;
  m.kind = kind;
  m.lambda = lambda.lambda;
  m.prior_mode = priors;
  m.grid = ds.grid;

  const double k_classes = static_cast<double>(groups.size());
  std::vector<Eigen::MatrixXd> class_covs;
  for (const auto& [id, indices] : groups) {
    MeanCov mc = estimate_mean_cov(spectra_matrix(ds, indices));
    m.classes.push_back(id);
    m.means.push_back(std::move(mc.mean));
    m.counts.push_back(static_cast<long>(indices.size()));
    m.priors.push_back(priors == PriorMode::Uniform
                           ? 1.0 / k_classes
                           : static_cast<double>(indices.size()) / static_cast<double>(ds.size()));
    class_covs.push_back(std::move(mc.covariance));
  }

  const auto factorize_class = [&](const Eigen::MatrixXd& cov, const ClassId* id) {
    try {
      return factorize(shrink_covariance(cov, lambda));
    } catch (const NumericError& e) {
      const std::string where = id ? " for class " + to_string(*id) : "";
      throw NumericError("covariance factorization failed" + where + " at lambda=" +
                         std::to_string(lambda.lambda) + "; use a larger shrinkage parameter (" +
                         e.what() + ")");
    }
  };

  if (kind == DiscriminantKind::QDA) {
    for (std::size_t k = 0; k < class_covs.size(); ++k)
      m.covariances.push_back(factorize_class(class_covs[k], &m.classes[k]));
  } else {
    // Pooled within-class covariance: sample-count-weighted average of the
    // per-class biased covariances.
    Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(ds.bands(), ds.bands());
    for (std::size_t k = 0; k < class_covs.size(); ++k)
      pooled += static_cast<double>(m.counts[k]) * class_covs[k];
    pooled /= static_cast<double>(ds.size());
    m.covariances.push_back(factorize_class(pooled, nullptr));
  }
  return m;
}

Eigen::VectorXd class_log_posteriors(const DiscriminantModel& m,
                                     const Eigen::Ref<const Eigen::VectorXd>& x) {
  require_bands(m, x.size());
  const std::size_t k_classes = m.classes.size();
  Eigen::VectorXd scores(static_cast<long>(k_classes));
  for (std::size_t k = 0; k < k_classes; ++k) {
    const CholeskyResult& chol = m.covariance_for(k);
    scores[static_cast<long>(k)] =
        std::log(m.priors[k]) + log_density(m.means[k], chol.factor, chol.log_det, x);
  }
  const double norm = log_sum_exp(std::span<const double>(scores.data(), k_classes));
  return scores.array() - norm;
}

JointPosteriorTable joint_posterior_table(const DiscriminantModel& m,
                                          const Eigen::Ref<const Eigen::VectorXd>& x) {
  require_mode(m, LabelingMode::JointCropStage, "joint_posterior_table");
  const Eigen::VectorXd log_post = class_log_posteriors(m, x);
  JointPosteriorTable table;
  table.probabilities.setZero();
  table.support.setConstant(false);
  for (std::size_t k = 0; k < m.classes.size(); ++k) {
    const int row = static_cast<int>(*m.classes[k].stage);
    const int col = static_cast<int>(m.classes[k].crop);
    table.probabilities(row, col) = std::exp(log_post[static_cast<long>(k)]);
    table.support(row, col) = true;
  }
  return table;
}

CropLabel predict_direct(const DiscriminantModel& m, const Eigen::Ref<const Eigen::VectorXd>& x) {
  require_mode(m, LabelingMode::CropOnly, "predict_direct");
  const Eigen::VectorXd log_post = class_log_posteriors(m, x);
  long best = 0;
  for (long k = 1; k < log_post.size(); ++k)
    if (log_post[k] > log_post[best]) best = k;
  return m.classes[static_cast<std::size_t>(best)].crop;
}

MarginalPrediction predict_mmp(const DiscriminantModel& m,
                               const Eigen::Ref<const Eigen::VectorXd>& x) {
  require_mode(m, LabelingMode::JointCropStage, "predict_mmp");
  const Eigen::VectorXd log_post = class_log_posteriors(m, x);

  // Column sums of the joint table, taken in log space over each crop's
  // supported stage cells before a single exponentiation.
  std::array<std::vector<double>, kNumCrops> per_crop;
  for (std::size_t k = 0; k < m.classes.size(); ++k)
    per_crop[static_cast<std::size_t>(m.classes[k].crop)].push_back(log_post[static_cast<long>(k)]);

  MarginalPrediction out;
  out.marginals.setZero();
  for (CropLabel crop : all_crops()) {
    const auto& cells = per_crop[static_cast<std::size_t>(crop)];
    if (!cells.empty())
      out.marginals[static_cast<int>(crop)] = std::exp(log_sum_exp(cells));
  }
  int best = 0;
  for (int c = 1; c < kNumCrops; ++c)
    if (out.marginals[c] > out.marginals[best]) best = c;
  out.crop = static_cast<CropLabel>(best);
  return out;
}

JointPrediction predict_mjp(const DiscriminantModel& m,
                            const Eigen::Ref<const Eigen::VectorXd>& x) {
  require_mode(m, LabelingMode::JointCropStage, "predict_mjp");
  const Eigen::VectorXd log_post = class_log_posteriors(m, x);
  // The class list is already in (crop alphabetical, stage enumeration) order,
  // so a strict-greater scan implements the tie-break.
  long best = 0;
  for (long k = 1; k < log_post.size(); ++k)
    if (log_post[k] > log_post[best]) best = k;
  const ClassId& id = m.classes[static_cast<std::size_t>(best)];
  return JointPrediction{id.crop, JointLabel{id.crop, *id.stage}};
}

}  // namespace cropspec

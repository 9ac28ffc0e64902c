#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "cropspec/gaussian.hpp"
#include "cropspec/types.hpp"

namespace cropspec {

enum class LabelingMode { CropOnly, JointCropStage };
enum class DiscriminantKind { LDA, QDA };
enum class PriorMode { Uniform, Empirical };

// Gaussian discriminant model. LDA pools one covariance factor across classes,
// QDA keeps one per class; class order is canonical (crop alphabetical, then
// stage enumeration order), which fixes argmax tie-breaking.
struct DiscriminantModel {
  LabelingMode mode = LabelingMode::CropOnly;
  DiscriminantKind kind = DiscriminantKind::LDA;
  double lambda = 0.0;
  PriorMode prior_mode = PriorMode::Uniform;
  WavelengthGrid grid;
  std::vector<ClassId> classes;
  std::vector<Eigen::VectorXd> means;      // one per class
  std::vector<double> priors;              // nonnegative, sum to 1
  std::vector<long> counts;                // training samples per class
  std::vector<CholeskyResult> covariances;  // size 1 for LDA, classes.size() for QDA

  int bands() const { return grid.bands(); }
  const CholeskyResult& covariance_for(std::size_t k) const {
    return kind == DiscriminantKind::LDA ? covariances[0] : covariances[k];
  }
};

// Fits per-class means and biased covariances on the dataset's crop or joint
// labels. LDA pools the sample-count-weighted per-class covariances before
// shrinkage; QDA shrinks each class covariance. Uniform priors are 1/K over
// the realized classes. Throws DataError when a realized class has fewer than
// 2 samples, NumericError when factorization fails at the given lambda.
DiscriminantModel fit_discriminant(const Dataset& ds, LabelingMode mode, DiscriminantKind kind,
                                   ShrinkageParam lambda, PriorMode priors = PriorMode::Uniform);

// log P(class | x) over the model's class list: log prior + Gaussian
// log-density, normalized with log_sum_exp. exp of the result sums to 1.
Eigen::VectorXd class_log_posteriors(const DiscriminantModel& m,
                                     const Eigen::Ref<const Eigen::VectorXd>& x);

// Crop-by-stage posterior grid for one spectrum. Cells for joint classes not
// realized in training are exactly zero and masked out of support.
struct JointPosteriorTable {
  Eigen::Matrix<double, kNumStages, kNumCrops> probabilities;
  Eigen::Matrix<bool, kNumStages, kNumCrops> support;

  double cell(StageLabel stage, CropLabel crop) const {
    return probabilities(static_cast<int>(stage), static_cast<int>(crop));
  }
  bool supported(StageLabel stage, CropLabel crop) const {
    return support(static_cast<int>(stage), static_cast<int>(crop));
  }
};

JointPosteriorTable joint_posterior_table(const DiscriminantModel& m,
                                          const Eigen::Ref<const Eigen::VectorXd>& x);

// Argmax crop of a crop-only model; ties go to the first class in canonical
// (alphabetical) order.
CropLabel predict_direct(const DiscriminantModel& m, const Eigen::Ref<const Eigen::VectorXd>& x);

// Max Marginal Probability: marginalize the joint posterior over stages in log
// space, pick the crop with the largest marginal.
struct MarginalPrediction {
  CropLabel crop;
  Eigen::Matrix<double, kNumCrops, 1> marginals;  // sums to 1; zero without support
};
MarginalPrediction predict_mmp(const DiscriminantModel& m,
                               const Eigen::Ref<const Eigen::VectorXd>& x);

// Max Joint Probability: the crop of the highest-probability (crop, stage)
// cell; ties break by crop alphabetical order, then stage enumeration order.
struct JointPrediction {
  CropLabel crop;
  JointLabel cell;
};
JointPrediction predict_mjp(const DiscriminantModel& m,
                            const Eigen::Ref<const Eigen::VectorXd>& x);

}  // namespace cropspec

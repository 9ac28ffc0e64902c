#pragma once

#include <Eigen/Dense>
#include <span>
#include <utility>
#include <vector>

namespace cropspec {

// Covariance shrinkage weight, a convex blend factor in [0, 1].
struct ShrinkageParam {
  double lambda = 0.0;
};

// Throws UsageError unless lambda is in [0, 1].
void validate(const ShrinkageParam& p);

// Fitted Gaussian for one class. covariance_factor is the lower-triangular
// Cholesky factor L of the regularized covariance, L * L^T = Sigma_reg, and
// log_det = 2 * sum(log(diag(L))).
struct ClassGaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance_factor;
  double log_det = 0.0;
  long sample_count = 0;
};

struct MeanCov {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

// Arithmetic mean and biased (divide-by-n) sample covariance.
MeanCov estimate_mean_cov(const Eigen::Ref<const Eigen::MatrixXd>& samples);
MeanCov estimate_mean_cov(const std::vector<Eigen::VectorXd>& samples);

// (1 - lambda) * cov + lambda * sigma2_bar * I with sigma2_bar = trace(cov)/B.
// The blend target is the average-variance identity, which keeps lambda
// meaningful across differently scaled bands and preserves the trace.
Eigen::MatrixXd shrink_covariance(const Eigen::Ref<const Eigen::MatrixXd>& cov, ShrinkageParam lambda);

struct CholeskyResult {
  Eigen::MatrixXd factor;  // lower triangular
  double log_det = 0.0;
};

// Cholesky factorization of an SPD matrix. Throws NumericError on a
// non-positive pivot; callers recover by increasing the shrinkage parameter.
CholeskyResult factorize(const Eigen::Ref<const Eigen::MatrixXd>& cov);

// Builds the per-class model: shrink, factorize, record the log-determinant.
ClassGaussian make_class_gaussian(Eigen::VectorXd mean, const Eigen::Ref<const Eigen::MatrixXd>& cov,
                                  ShrinkageParam lambda, long sample_count);

// Multivariate normal log-density, evaluated with a triangular solve:
//   -1/2 * (B*log(2*pi) + log_det + ||L^-1 (x - mean)||^2)
double log_density(const ClassGaussian& g, const Eigen::Ref<const Eigen::VectorXd>& x);
double log_density(const Eigen::Ref<const Eigen::VectorXd>& mean,
                   const Eigen::Ref<const Eigen::MatrixXd>& factor, double log_det,
                   const Eigen::Ref<const Eigen::VectorXd>& x);

// log(sum(exp(v_i))) via max subtraction; exact for single-element input,
// tolerates -inf entries.
double log_sum_exp(std::span<const double> values);

}  // namespace cropspec

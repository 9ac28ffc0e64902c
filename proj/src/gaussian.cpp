#include "cropspec/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cropspec/errors.hpp"

namespace cropspec {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

void validate(const ShrinkageParam& p) {
  if (!(p.lambda >= 0.0 && p.lambda <= 1.0))
    throw UsageError("shrinkage parameter must be in [0, 1], got " + std::to_string(p.lambda));
}

MeanCov estimate_mean_cov(const Eigen::Ref<const Eigen::MatrixXd>& samples) {
  const long n = samples.rows();
  if (n == 0) throw DataError("estimate_mean_cov: no samples");
  MeanCov out;
  out.mean = samples.colwise().mean();
  const Eigen::MatrixXd centered = samples.rowwise() - out.mean.transpose();
  out.covariance = (centered.adjoint() * centered) / static_cast<double>(n);
  return out;
}

MeanCov estimate_mean_cov(const std::vector<Eigen::VectorXd>& samples) {
  if (samples.empty()) throw DataError("estimate_mean_cov: no samples");
  const long bands = samples.front().size();
  for (const auto& s : samples)
    if (s.size() != bands) throw DataError("estimate_mean_cov: inconsistent sample lengths");
  Eigen::MatrixXd m(static_cast<long>(samples.size()), bands);
  for (std::size_t i = 0; i < samples.size(); ++i) m.row(static_cast<long>(i)) = samples[i];
  return estimate_mean_cov(m);
}

Eigen::MatrixXd shrink_covariance(const Eigen::Ref<const Eigen::MatrixXd>& cov, ShrinkageParam lambda) {
  validate(lambda);
  if (cov.rows() != cov.cols()) throw DataError("shrink_covariance: matrix is not square");
  const long b = cov.rows();
  if (lambda.lambda == 0.0) return cov;
  const double sigma2_bar = cov.trace() / static_cast<double>(b);
  if (lambda.lambda == 1.0)
    return Eigen::MatrixXd(sigma2_bar * Eigen::MatrixXd::Identity(b, b));
  Eigen::MatrixXd out = (1.0 - lambda.lambda) * cov;
  out.diagonal().array() += lambda.lambda * sigma2_bar;
  return out;
}

CholeskyResult factorize(const Eigen::Ref<const Eigen::MatrixXd>& cov) {
  if (cov.rows() != cov.cols()) throw DataError("factorize: matrix is not square");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw NumericError(
        "factorize: non-positive pivot, matrix is not positive definite; "
        "increase the shrinkage parameter");
  CholeskyResult out;
  out.factor = llt.matrixL();
  const auto diag = out.factor.diagonal();
  if ((diag.array() <= 0.0).any())
    throw NumericError("factorize: non-positive diagonal in Cholesky factor");
  out.log_det = 2.0 * diag.array().log().sum();
  return out;
}

ClassGaussian make_class_gaussian(Eigen::VectorXd mean, const Eigen::Ref<const Eigen::MatrixXd>& cov,
                                  ShrinkageParam lambda, long sample_count) {
  CholeskyResult chol = factorize(shrink_covariance(cov, lambda));
  ClassGaussian g;
  g.mean = std::move(mean);
  g.covariance_factor = std::move(chol.factor);
  g.log_det = chol.log_det;
  g.sample_count = sample_count;
  return g;
}

double log_density(const Eigen::Ref<const Eigen::VectorXd>& mean,
                   const Eigen::Ref<const Eigen::MatrixXd>& factor, double log_det,
                   const Eigen::Ref<const Eigen::VectorXd>& x) {
  const long b = mean.size();
  if (x.size() != b)
    throw DataError("log_density: input has " + std::to_string(x.size()) + " bands, model has " +
                    std::to_string(b));
  const Eigen::VectorXd z = factor.triangularView<Eigen::Lower>().solve(x - mean);
  return -0.5 * (static_cast<double>(b) * kLog2Pi + log_det + z.squaredNorm());
}

double log_density(const ClassGaussian& g, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return log_density(g.mean, g.covariance_factor, g.log_det, x);
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw DataError("log_sum_exp: empty input");
  const double m = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(m)) return m;  // all -inf, or an inf dominates
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - m);
  return m + std::log(sum);
}

}  // namespace cropspec

#include "cropspec/mlp.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "cropspec/errors.hpp"
#include "cropspec/rng.hpp"

namespace cropspec {

namespace {

constexpr double kStdFloor = 1e-8;

// Softmax over each column, numerically stabilized.
Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits;
  for (long c = 0; c < p.cols(); ++c) {
    p.col(c).array() -= p.col(c).maxCoeff();
    p.col(c) = p.col(c).array().exp();
    p.col(c) /= p.col(c).sum();
  }
  return p;
}

struct Network {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Symmetric uniform init scaled by 1/sqrt(fan-in); biases start at zero.
// Draw order is fixed (layer by layer, row-major) for reproducibility.
Network init_network(long inputs, const MLPConfig& cfg, Rng& rng) {
  Network net;
  std::vector<long> sizes{inputs};
  for (int w : cfg.hidden_layers) sizes.push_back(w);
  sizes.push_back(kNumCrops);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const long in = sizes[l], out = sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Eigen::MatrixXd w(out, in);
    for (long r = 0; r < out; ++r)
      for (long c = 0; c < in; ++c) w(r, c) = rng.uniform(-bound, bound);
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(Eigen::VectorXd::Zero(out));
  }
  return net;
}

struct ForwardCache {
  std::vector<Eigen::MatrixXd> activations;  // activations[0] is the input batch
  std::vector<Eigen::MatrixXd> pre_acts;     // z per layer
  std::vector<Eigen::MatrixXd> dropout_masks;
  Eigen::MatrixXd probs;
};

// Forward over a batch of columns. Rectifier at exactly 0 stays 0 (and its
// subgradient is taken as 0 in backward). When training, inverted dropout
// scales kept units by 1/(1-p).
ForwardCache forward(const Network& net, const Eigen::MatrixXd& batch, double dropout_rate,
                     Rng* rng) {
  ForwardCache cache;
  cache.activations.push_back(batch);
  const std::size_t layers = net.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z =
        (net.weights[l] * cache.activations.back()).colwise() + net.biases[l];
    if (l + 1 < layers) {
      Eigen::MatrixXd a = z.cwiseMax(0.0);
      if (rng != nullptr && dropout_rate > 0.0) {
        Eigen::MatrixXd mask(a.rows(), a.cols());
        const double keep_scale = 1.0 / (1.0 - dropout_rate);
        for (long c = 0; c < mask.cols(); ++c)
          for (long r = 0; r < mask.rows(); ++r)
            mask(r, c) = rng->uniform() >= dropout_rate ? keep_scale : 0.0;
        a = a.cwiseProduct(mask);
        cache.dropout_masks.push_back(std::move(mask));
      }
      cache.pre_acts.push_back(std::move(z));
      cache.activations.push_back(std::move(a));
    } else {
      cache.probs = softmax_columns(z);
      cache.pre_acts.push_back(std::move(z));
    }
  }
  return cache;
}

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Backward pass for mean cross-entropy over the batch.
Gradients backward(const Network& net, const ForwardCache& cache, const Eigen::MatrixXd& one_hot) {
  const std::size_t layers = net.weights.size();
  const double batch_n = static_cast<double>(one_hot.cols());
  Gradients grads;
  grads.weights.resize(layers);
  grads.biases.resize(layers);

  Eigen::MatrixXd dz = (cache.probs - one_hot) / batch_n;
  for (std::size_t l = layers; l-- > 0;) {
    grads.weights[l] = dz * cache.activations[l].transpose();
    grads.biases[l] = dz.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd da = net.weights[l].transpose() * dz;
    if (!cache.dropout_masks.empty()) da = da.cwiseProduct(cache.dropout_masks[l - 1]);
    dz = da.cwiseProduct(
        (cache.pre_acts[l - 1].array() > 0.0).cast<double>().matrix());
  }
  return grads;
}

double mean_cross_entropy(const Eigen::MatrixXd& probs, const Eigen::MatrixXd& one_hot) {
  // clamp avoids log(0) for a fully confident wrong prediction
  const double eps = 1e-300;
  double loss = 0.0;
  for (long c = 0; c < probs.cols(); ++c)
    for (long r = 0; r < probs.rows(); ++r)
      if (one_hot(r, c) != 0.0) loss -= std::log(std::max(probs(r, c), eps));
  return loss / static_cast<double>(probs.cols());
}

Eigen::MatrixXd one_hot_labels(const std::vector<CropLabel>& labels) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(kNumCrops, static_cast<long>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i)
    y(static_cast<int>(labels[i]), static_cast<long>(i)) = 1.0;
  return y;
}

}  // namespace

void validate(const MLPConfig& cfg) {
  if (cfg.hidden_layers.empty() || cfg.hidden_layers.size() > 2)
    throw UsageError("mlp: one or two hidden layers are supported");
  for (int w : cfg.hidden_layers)
    if (w < 1) throw UsageError("mlp: hidden layer width must be at least 1");
  if (cfg.epochs < 1) throw UsageError("mlp: epochs must be at least 1");
  if (cfg.batch_size < 1) throw UsageError("mlp: batch_size must be at least 1");
  if (!(cfg.learning_rate > 0.0)) throw UsageError("mlp: learning_rate must be positive");
  if (!(cfg.dropout_rate >= 0.0 && cfg.dropout_rate < 1.0))
    throw UsageError("mlp: dropout_rate must be in [0, 1)");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
    throw UsageError("mlp: momentum must be in [0, 1)");
}

MLPModel train_mlp(const Dataset& ds, const MLPConfig& cfg) {
  validate(cfg);
  validate(ds);

  const long n = ds.size();
  const long bands = ds.bands();
  Eigen::MatrixXd x = spectra_matrix(ds).transpose();  // bands x n

  MLPModel model;
  model.grid = ds.grid;
  model.input_mean = x.rowwise().mean();
  Eigen::MatrixXd centered = x.colwise() - model.input_mean;
  model.input_std = (centered.array().square().rowwise().mean()).sqrt().cwiseMax(kStdFloor);
  Eigen::MatrixXd xs = centered.array().colwise() / model.input_std.array();

  std::vector<CropLabel> labels;
  labels.reserve(static_cast<std::size_t>(n));
  for (const SampleRecord& rec : ds.records) labels.push_back(rec.crop);
  const Eigen::MatrixXd one_hot = one_hot_labels(labels);

  Rng rng(cfg.seed);
  Network net = init_network(bands, cfg, rng);

  std::vector<Eigen::MatrixXd> vel_w;
  std::vector<Eigen::VectorXd> vel_b;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    vel_w.emplace_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    vel_b.emplace_back(Eigen::VectorXd::Zero(net.biases[l].size()));
  }

  std::vector<long> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0L);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (long start = 0; start < n; start += cfg.batch_size) {
      const long count = std::min<long>(cfg.batch_size, n - start);
      Eigen::MatrixXd xb(bands, count);
      Eigen::MatrixXd yb(kNumCrops, count);
      for (long i = 0; i < count; ++i) {
        xb.col(i) = xs.col(order[static_cast<std::size_t>(start + i)]);
        yb.col(i) = one_hot.col(order[static_cast<std::size_t>(start + i)]);
      }
      ForwardCache cache = forward(net, xb, cfg.dropout_rate, &rng);
      epoch_loss += mean_cross_entropy(cache.probs, yb) * static_cast<double>(count);
      Gradients grads = backward(net, cache, yb);
      for (std::size_t l = 0; l < net.weights.size(); ++l) {
        vel_w[l] = cfg.momentum * vel_w[l] - cfg.learning_rate * grads.weights[l];
        vel_b[l] = cfg.momentum * vel_b[l] - cfg.learning_rate * grads.biases[l];
        net.weights[l] += vel_w[l];
        net.biases[l] += vel_b[l];
      }
    }
    model.epoch_losses.push_back(epoch_loss / static_cast<double>(n));
  }

  model.weights = std::move(net.weights);
  model.biases = std::move(net.biases);
  return model;
}

MLPPrediction predict_mlp(const MLPModel& m, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != m.input_mean.size())
    throw DataError("mlp predict: input has " + std::to_string(x.size()) + " bands, model has " +
                    std::to_string(m.input_mean.size()));
  Eigen::MatrixXd col = ((x - m.input_mean).array() / m.input_std.array()).matrix();
  Network net{m.weights, m.biases};
  const ForwardCache cache = forward(net, col, 0.0, nullptr);
  MLPPrediction out;
  out.probabilities = cache.probs.col(0);
  int best = 0;
  for (int c = 1; c < kNumCrops; ++c)
    if (out.probabilities[c] > out.probabilities[best]) best = c;
  out.crop = static_cast<CropLabel>(best);
  return out;
}

double gradient_check(const MLPConfig& cfg, const Eigen::Ref<const Eigen::MatrixXd>& samples,
                      const std::vector<CropLabel>& labels) {
  MLPConfig check_cfg = cfg;
  check_cfg.dropout_rate = 0.0;  // the check runs the deterministic path
  validate(check_cfg);
  if (samples.rows() == 0 || static_cast<std::size_t>(samples.rows()) != labels.size())
    throw DataError("gradient_check: sample/label count mismatch");

  // Standardize with the batch's own statistics, as training would.
  Eigen::MatrixXd x = samples.transpose();
  const Eigen::VectorXd mean = x.rowwise().mean();
  Eigen::MatrixXd centered = x.colwise() - mean;
  const Eigen::VectorXd stddev =
      (centered.array().square().rowwise().mean()).sqrt().cwiseMax(kStdFloor);
  const Eigen::MatrixXd xs = centered.array().colwise() / stddev.array();
  const Eigen::MatrixXd one_hot = one_hot_labels(labels);

  Rng rng(check_cfg.seed);
  Network net = init_network(x.rows(), check_cfg, rng);
  // Finite differences are undefined at the rectifier kink, so evaluate at a
  // generic point: a small bias offset keeps pre-activations away from zero
  // (with zero biases, one sample deadening a whole layer parks the next
  // layer's inputs exactly on the kink).
  for (Eigen::VectorXd& b : net.biases) b.setConstant(0.1);

  const ForwardCache cache = forward(net, xs, 0.0, nullptr);
  const Gradients grads = backward(net, cache, one_hot);

  const auto loss_at = [&]() {
    return mean_cross_entropy(forward(net, xs, 0.0, nullptr).probs, one_hot);
  };

  const double step = 1e-5;
  double worst = 0.0;
  const auto check_param = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + step;
    const double loss_plus = loss_at();
    param = saved - step;
    const double loss_minus = loss_at();
    param = saved;
    const double numeric = (loss_plus - loss_minus) / (2.0 * step);
    const double rel = std::abs(analytic - numeric) /
                       std::max({1.0, std::abs(analytic), std::abs(numeric)});
    worst = std::max(worst, rel);
  };

  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    for (long r = 0; r < net.weights[l].rows(); ++r)
      for (long c = 0; c < net.weights[l].cols(); ++c)
        check_param(net.weights[l](r, c), grads.weights[l](r, c));
    for (long r = 0; r < net.biases[l].size(); ++r)
      check_param(net.biases[l][r], grads.biases[l][r]);
  }
  return worst;
}

}  // namespace cropspec

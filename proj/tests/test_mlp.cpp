#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include <cropspec/errors.hpp>
#include <cropspec/mlp.hpp>

#include "fixtures.hpp"

using namespace cropspec;

namespace {

MLPConfig small_config() {
  MLPConfig cfg;
  cfg.hidden_layers = {16};
  cfg.epochs = 60;
  cfg.batch_size = 8;
  cfg.seed = 7;
  return cfg;
}

double train_accuracy(const MLPModel& m, const Dataset& ds) {
  long hits = 0;
  for (const auto& rec : ds.records)
    if (predict_mlp(m, rec.reflectance).crop == rec.crop) ++hits;
  return static_cast<double>(hits) / static_cast<double>(ds.size());
}

}  // namespace

TEST_CASE("configuration validation rejects out-of-range settings") {
  MLPConfig cfg;
  CHECK_NOTHROW(validate(cfg));

  cfg.hidden_layers = {};
  CHECK_THROWS_AS(validate(cfg), UsageError);
  cfg.hidden_layers = {8, 8, 8};
  CHECK_THROWS_AS(validate(cfg), UsageError);
  cfg.hidden_layers = {0};
  CHECK_THROWS_AS(validate(cfg), UsageError);

  cfg = MLPConfig{};
  cfg.epochs = 0;
  CHECK_THROWS_AS(validate(cfg), UsageError);
  cfg = MLPConfig{};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(validate(cfg), UsageError);
  cfg = MLPConfig{};
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(validate(cfg), UsageError);
  cfg = MLPConfig{};
  cfg.dropout_rate = 1.0;
  CHECK_THROWS_AS(validate(cfg), UsageError);
  cfg = MLPConfig{};
  cfg.dropout_rate = -0.1;
  CHECK_THROWS_AS(validate(cfg), UsageError);
  cfg = MLPConfig{};
  cfg.momentum = 1.0;
  CHECK_THROWS_AS(validate(cfg), UsageError);
}

TEST_CASE("a separable three-crop problem trains to high accuracy") {
  const Dataset ds = fixtures::separable_dataset({{CropLabel::Corn, StageLabel::Late},
                                                  {CropLabel::Rice, StageLabel::Late},
                                                  {CropLabel::Soybeans, StageLabel::Late}},
                                                 30, 21, 0.3);
  const MLPModel m = train_mlp(ds, small_config());
  CHECK(train_accuracy(m, ds) >= 0.99);
  CHECK(m.epoch_losses.size() == 60);
  CHECK(m.epoch_losses.back() < m.epoch_losses.front());
}

TEST_CASE("training on a single label predicts that label everywhere") {
  Dataset ds;
  ds.grid = fixtures::grid2();
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < 40; ++i)
    ds.records.push_back(fixtures::make_record(CropLabel::WinterWheat, StageLabel::Critical,
                                               {normal(rng), normal(rng)}));
  MLPConfig cfg = small_config();
  cfg.epochs = 1;
  // A step size large enough that the single epoch outweighs the random
  // initialization.
  cfg.learning_rate = 0.5;
  cfg.batch_size = 4;
  const MLPModel m = train_mlp(ds, cfg);
  for (double x : {-5.0, 0.0, 5.0})
    CHECK(predict_mlp(m, Eigen::Vector2d(x, -x)).crop == CropLabel::WinterWheat);
}

TEST_CASE("training is deterministic in the seed") {
  const Dataset ds = fixtures::separable_dataset(
      {{CropLabel::Corn, StageLabel::Late}, {CropLabel::Cotton, StageLabel::Late}}, 20, 31, 0.5);
  MLPConfig cfg = small_config();
  cfg.epochs = 10;
  const MLPModel a = train_mlp(ds, cfg);
  const MLPModel b = train_mlp(ds, cfg);
  cfg.seed = 8;
  const MLPModel c = train_mlp(ds, cfg);

  REQUIRE(a.weights.size() == b.weights.size());
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    CHECK((a.weights[l] - b.weights[l]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.biases[l] - b.biases[l]).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(a.epoch_losses == b.epoch_losses);

  bool any_diff = false;
  for (std::size_t l = 0; l < a.weights.size(); ++l)
    any_diff |= ((a.weights[l] - c.weights[l]).cwiseAbs().maxCoeff() > 0.0);
  CHECK(any_diff);
}

TEST_CASE("prediction probabilities always sum to one") {
  const Dataset ds = fixtures::separable_dataset(
      {{CropLabel::Corn, StageLabel::Late}, {CropLabel::Rice, StageLabel::Late}}, 16, 41, 0.4);
  MLPConfig cfg = small_config();
  cfg.epochs = 5;
  const MLPModel m = train_mlp(ds, cfg);

  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> unif(-100.0, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const auto pred = predict_mlp(m, Eigen::Vector2d(unif(rng), unif(rng)));
    CHECK(pred.probabilities.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pred.probabilities.minCoeff() >= 0.0);
  }
}

TEST_CASE("an all-zero network is maximally uncertain and ties to the first crop") {
  MLPModel m;
  m.grid = fixtures::grid2();
  m.input_mean = Eigen::VectorXd::Zero(2);
  m.input_std = Eigen::VectorXd::Ones(2);
  m.weights = {Eigen::MatrixXd::Zero(4, 2), Eigen::MatrixXd::Zero(kNumCrops, 4)};
  m.biases = {Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(kNumCrops)};

  const auto pred = predict_mlp(m, Eigen::Vector2d(3.0, -1.0));
  for (int c = 0; c < kNumCrops; ++c) CHECK(pred.probabilities[c] == 0.2);
  CHECK(pred.crop == CropLabel::Corn);
}

TEST_CASE("dimension mismatches are rejected") {
  const Dataset ds = fixtures::separable_dataset(
      {{CropLabel::Corn, StageLabel::Late}, {CropLabel::Rice, StageLabel::Late}}, 8, 3, 0.4);
  MLPConfig cfg = small_config();
  cfg.epochs = 1;
  const MLPModel m = train_mlp(ds, cfg);
  CHECK_THROWS_AS(predict_mlp(m, Eigen::VectorXd::Zero(3)), DataError);
}

TEST_CASE("two hidden layers work end to end") {
  const Dataset ds = fixtures::separable_dataset(
      {{CropLabel::Corn, StageLabel::Late}, {CropLabel::WinterWheat, StageLabel::Late}}, 24, 51,
      0.3);
  MLPConfig cfg = small_config();
  cfg.hidden_layers = {12, 8};
  const MLPModel m = train_mlp(ds, cfg);
  REQUIRE(m.weights.size() == 3);
  CHECK(m.weights[0].rows() == 12);
  CHECK(m.weights[1].rows() == 8);
  CHECK(m.weights[2].rows() == kNumCrops);
  CHECK(train_accuracy(m, ds) >= 0.99);
}

TEST_CASE("analytic gradients match central finite differences") {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int bands = 2 + static_cast<int>(rng() % 5);
    const int n = 3 + static_cast<int>(rng() % 6);
    Eigen::MatrixXd samples(n, bands);
    for (int i = 0; i < n; ++i)
      for (int b = 0; b < bands; ++b) samples(i, b) = unif(rng);
    std::vector<CropLabel> labels;
    for (int i = 0; i < n; ++i)
      labels.push_back(all_crops()[static_cast<std::size_t>(rng() % 5)]);

    MLPConfig cfg;
    cfg.seed = 100 + static_cast<std::uint64_t>(trial);
    cfg.hidden_layers = (trial % 2 == 0) ? std::vector<int>{1 + static_cast<int>(rng() % 8)}
                                         : std::vector<int>{1 + static_cast<int>(rng() % 8),
                                                            1 + static_cast<int>(rng() % 8)};
    CHECK(gradient_check(cfg, samples, labels) < 1e-6);
  }
}

TEST_CASE("a zero input batch leaves hidden gradients dead") {
  // All-zero inputs standardize to zero, so first-layer weight gradients
  // vanish on both the analytic and the numeric side, and the check's bias
  // offset keeps every pre-activation off the rectifier kink.
  Eigen::MatrixXd samples = Eigen::MatrixXd::Zero(4, 3);
  const std::vector<CropLabel> labels{CropLabel::Corn, CropLabel::Rice, CropLabel::Corn,
                                      CropLabel::Cotton};
  MLPConfig cfg;
  cfg.hidden_layers = {5};
  cfg.seed = 9;
  CHECK(gradient_check(cfg, samples, labels) < 1e-9);
}

TEST_CASE("gradient check works on a single-sample batch") {
  Eigen::MatrixXd samples(1, 2);
  samples << 0.7, -1.2;
  const std::vector<CropLabel> labels{CropLabel::Soybeans};
  MLPConfig cfg;
  cfg.hidden_layers = {4};
  cfg.seed = 13;
  CHECK(gradient_check(cfg, samples, labels) < 1e-6);
}

TEST_CASE("standardization statistics are frozen from the training data") {
  Dataset ds;
  ds.grid = fixtures::grid2();
  // Band 0 constant: its deviation is floored, not divided by zero.
  for (int i = 0; i < 12; ++i)
    ds.records.push_back(fixtures::make_record(
        i % 2 == 0 ? CropLabel::Corn : CropLabel::Rice, StageLabel::Late,
        {42.0, i % 2 == 0 ? 1.0 : 2.0}));
  MLPConfig cfg = small_config();
  cfg.epochs = 2;
  const MLPModel m = train_mlp(ds, cfg);
  CHECK(m.input_mean[0] == doctest::Approx(42.0).epsilon(1e-12));
  CHECK(m.input_std[0] >= 1e-8);
  CHECK(std::isfinite(predict_mlp(m, Eigen::Vector2d(42.0, 1.5)).probabilities.sum()));
}

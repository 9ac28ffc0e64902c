#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include <cropspec/classify.hpp>
#include <cropspec/errors.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace cropspec;

namespace {

Eigen::Vector2d probe(double x0, double x1 = 0.0) { return Eigen::Vector2d(x0, x1); }

// Expands a fitted model into the oracle's flat class list.  The covariance
// is rebuilt from the stored factor by explicit multiplication.
std::vector<oracles::GaussianClass2> oracle_classes(const DiscriminantModel& m) {
  std::vector<oracles::GaussianClass2> out;
  for (std::size_t k = 0; k < m.classes.size(); ++k) {
    const Eigen::MatrixXd& l = m.covariance_for(k).factor;
    oracles::GaussianClass2 cls;
    cls.prior = m.priors[k];
    cls.mean = {m.means[k][0], m.means[k][1]};
    cls.cov.a = l(0, 0) * l(0, 0);
    cls.cov.b = l(0, 0) * l(1, 0);
    cls.cov.c = cls.cov.b;
    cls.cov.d = l(1, 0) * l(1, 0) + l(1, 1) * l(1, 1);
    out.push_back(cls);
  }
  return out;
}

}  // namespace

TEST_CASE("crop-only fit covers the realized crops with uniform priors") {
  Dataset ds;
  ds.grid = fixtures::grid2();
  fixtures::add_corner_class(ds, CropLabel::Corn, StageLabel::Critical, 0.0, 0.0);
  fixtures::add_corner_class(ds, CropLabel::Rice, StageLabel::Late, 10.0, 0.0);
  fixtures::add_corner_class(ds, CropLabel::WinterWheat, StageLabel::Harvest, 20.0, 0.0);

  const auto m = fit_discriminant(ds, LabelingMode::CropOnly, DiscriminantKind::LDA,
                                  ShrinkageParam{0.0});
  REQUIRE(m.classes.size() == 3);
  // Canonical order is alphabetical.
  CHECK(m.classes[0].crop == CropLabel::Corn);
  CHECK(m.classes[1].crop == CropLabel::Rice);
  CHECK(m.classes[2].crop == CropLabel::WinterWheat);
  CHECK_FALSE(m.classes[0].stage.has_value());
  for (double p : m.priors) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(m.covariances.size() == 1);  // pooled
  CHECK(m.counts == std::vector<long>{4, 4, 4});
}

TEST_CASE("joint fit keeps one class per realized crop-stage pair") {
  Dataset ds;
  ds.grid = fixtures::grid2();
  fixtures::add_corner_class(ds, CropLabel::Corn, StageLabel::Critical, 0.0, 0.0);
  fixtures::add_corner_class(ds, CropLabel::Corn, StageLabel::Harvest, 5.0, 0.0);
  fixtures::add_corner_class(ds, CropLabel::Rice, StageLabel::Late, 10.0, 0.0);

  const auto m = fit_discriminant(ds, LabelingMode::JointCropStage, DiscriminantKind::QDA,
                                  ShrinkageParam{0.0});
  REQUIRE(m.classes.size() == 3);
  CHECK(m.classes[0].stage == StageLabel::Critical);
  CHECK(m.classes[1].stage == StageLabel::Harvest);
  CHECK(m.classes[2].crop == CropLabel::Rice);
  CHECK(m.covariances.size() == 3);  // per class
}

TEST_CASE("corner samples give exactly identity covariance") {
  Dataset ds;
  ds.grid = fixtures::grid2();
  fixtures::add_corner_class(ds, CropLabel::Corn, StageLabel::Critical, 3.0, -2.0);
  const auto m = fit_discriminant(ds, LabelingMode::CropOnly, DiscriminantKind::QDA,
                                  ShrinkageParam{0.0});
  CHECK(m.means[0][0] == 3.0);
  CHECK(m.means[0][1] == -2.0);
  const Eigen::MatrixXd& l = m.covariances[0].factor;
  CHECK(l(0, 0) == 1.0);
  CHECK(l(1, 0) == 0.0);
  CHECK(l(1, 1) == 1.0);
  CHECK(m.covariances[0].log_det == 0.0);
}

TEST_CASE("pooling weights class covariances by sample count") {
  Dataset ds;
  ds.grid = fixtures::grid2();
  // Corn: one corner set scaled by 2 (covariance 4I, 4 samples).
  for (const auto [dx, dy] : {std::pair{2.0, 2.0}, std::pair{2.0, -2.0}, std::pair{-2.0, 2.0},
                              std::pair{-2.0, -2.0}})
    ds.records.push_back(fixtures::make_record(CropLabel::Corn, StageLabel::Late, {dx, 10.0 + dy}));
  // Soybeans: three corner sets (covariance I, 12 samples).
  for (int rep = 0; rep < 3; ++rep)
    fixtures::add_corner_class(ds, CropLabel::Soybeans, StageLabel::Late, 20.0, 0.0);

  const auto m = fit_discriminant(ds, LabelingMode::CropOnly, DiscriminantKind::LDA,
                                  ShrinkageParam{0.0});
  // Pooled covariance (4*4I + 12*I) / 16 = 1.75 I, so the factor is sqrt(1.75) I.
  const Eigen::MatrixXd& l = m.covariances[0].factor;
  CHECK(l(0, 0) == doctest::Approx(std::sqrt(1.75)).epsilon(1e-15));
  CHECK(l(1, 1) == doctest::Approx(std::sqrt(1.75)).epsilon(1e-15));
  CHECK(l(1, 0) == 0.0);
}

TEST_CASE("a class with fewer than two samples is rejected by name") {
  Dataset ds;
  ds.grid = fixtures::grid2();
  fixtures::add_corner_class(ds, CropLabel::Rice, StageLabel::Late, 0.0, 0.0);
  ds.records.push_back(fixtures::make_record(CropLabel::Corn, StageLabel::Critical, {5.0, 5.0}));

  try {
    fit_discriminant(ds, LabelingMode::JointCropStage, DiscriminantKind::QDA, ShrinkageParam{0.5});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("Corn/Critical") != std::string::npos);
  }
}

TEST_CASE("degenerate covariance at zero shrinkage raises a numeric error") {
  Dataset ds;
  ds.grid = fixtures::grid2();
  // Two samples per class span a line: the 2x2 covariance is rank 1.
  for (int i = 0; i < 2; ++i)
    ds.records.push_back(
        fixtures::make_record(CropLabel::Corn, StageLabel::Late, {double(i), double(i)}));
  fixtures::add_corner_class(ds, CropLabel::Rice, StageLabel::Late, 10.0, 0.0);

  CHECK_THROWS_AS(fit_discriminant(ds, LabelingMode::CropOnly, DiscriminantKind::QDA,
                                   ShrinkageParam{0.0}),
                  NumericError);
  // The same data fits once shrinkage lifts the small eigenvalue.
  CHECK_NOTHROW(fit_discriminant(ds, LabelingMode::CropOnly, DiscriminantKind::QDA,
                                 ShrinkageParam{0.2}));
}

TEST_CASE("two indistinguishable classes split the posterior evenly") {
  Dataset ds;
  ds.grid = fixtures::grid2();
  fixtures::add_corner_class(ds, CropLabel::Corn, StageLabel::Critical, 1.0, 1.0);
  fixtures::add_corner_class(ds, CropLabel::Soybeans, StageLabel::Critical, 1.0, 1.0);
  const auto m = fit_discriminant(ds, LabelingMode::CropOnly, DiscriminantKind::QDA,
                                  ShrinkageParam{0.0});
  for (double x0 : {-3.0, 0.0, 1.0, 7.5}) {
    const Eigen::VectorXd lp = class_log_posteriors(m, probe(x0, 2.0));
    CHECK(lp[0] == doctest::Approx(std::log(0.5)).epsilon(1e-12));
    CHECK(lp[1] == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  }
}

TEST_CASE("well-separated classes give near-certain posteriors") {
  Dataset ds;
  ds.grid = fixtures::grid2();
  fixtures::add_corner_class(ds, CropLabel::Corn, StageLabel::Critical, 0.0, 0.0);
  fixtures::add_corner_class(ds, CropLabel::Cotton, StageLabel::Critical, 40.0, 0.0);
  const auto m = fit_discriminant(ds, LabelingMode::CropOnly, DiscriminantKind::LDA,
                                  ShrinkageParam{0.0});
  const Eigen::VectorXd lp = class_log_posteriors(m, probe(0.0));
  CHECK(std::exp(lp[0]) > 0.999);
  CHECK(predict_direct(m, probe(0.0)) == CropLabel::Corn);
  CHECK(predict_direct(m, probe(40.0)) == CropLabel::Cotton);
}

TEST_CASE("posteriors normalize for random models and probes") {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> unif(-5.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n_classes = 2 + static_cast<int>(rng() % 5);
    Dataset ds;
    ds.grid = fixtures::grid2();
    for (int k = 0; k < n_classes; ++k)
      fixtures::add_corner_class(ds, all_crops()[static_cast<std::size_t>(k) % 5],
                                 all_stages()[static_cast<std::size_t>(k) / 5], unif(rng),
                                 unif(rng));
    const auto kind = (trial % 2 == 0) ? DiscriminantKind::LDA : DiscriminantKind::QDA;
    const auto m = fit_discriminant(ds, LabelingMode::JointCropStage, kind,
                                    ShrinkageParam{0.1});
    for (int rep = 0; rep < 20; ++rep) {
      const Eigen::Vector2d x = probe(unif(rng), unif(rng));
      CHECK(class_log_posteriors(m, x).array().exp().sum() == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(joint_posterior_table(m, x).probabilities.sum() == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(predict_mmp(m, x).marginals.sum() == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("posteriors match the direct-formula oracle") {
  std::mt19937_64 rng(73);
  std::uniform_real_distribution<double> unif(-4.0, 4.0);
  for (int trial = 0; trial < 20; ++trial) {
    // Random joint problems over at most 6 classes with genuinely random
    // spectra (not the corner construction), fitted with modest shrinkage.
    const int n_classes = 2 + static_cast<int>(rng() % 5);
    Dataset ds;
    ds.grid = fixtures::grid2();
    std::normal_distribution<double> jitter(0.0, 1.5);
    for (int k = 0; k < n_classes; ++k) {
      const CropLabel crop = all_crops()[static_cast<std::size_t>(k) % 5];
      const StageLabel stage = all_stages()[static_cast<std::size_t>(k) / 5];
      const double cx = unif(rng), cy = unif(rng);
      for (int i = 0; i < 12; ++i)
        ds.records.push_back(
            fixtures::make_record(crop, stage, {cx + jitter(rng), cy + jitter(rng)}));
    }
    const auto m = fit_discriminant(ds, LabelingMode::JointCropStage, DiscriminantKind::QDA,
                                    ShrinkageParam{0.1});
    const auto classes = oracle_classes(m);

    for (int rep = 0; rep < 50; ++rep) {
      const std::array<double, 2> xo{unif(rng), unif(rng)};
      const Eigen::Vector2d x = probe(xo[0], xo[1]);
      const oracles::Vec want = oracles::naive_posteriors2(classes, xo);
      const Eigen::VectorXd got = class_log_posteriors(m, x).array().exp();

      REQUIRE(static_cast<std::size_t>(got.size()) == want.size());
      for (std::size_t k = 0; k < want.size(); ++k)
        CHECK(got[static_cast<long>(k)] == doctest::Approx(want[k]).epsilon(1e-9));

      // Marginal and joint argmax agree with brute force over the class list.
      oracles::Vec crop_mass(kNumCrops, 0.0);
      for (std::size_t k = 0; k < want.size(); ++k)
        crop_mass[static_cast<std::size_t>(m.classes[k].crop)] += want[k];
      const auto mmp = predict_mmp(m, x);
      CHECK(static_cast<std::size_t>(mmp.crop) == oracles::naive_argmax(crop_mass));
      for (int c = 0; c < kNumCrops; ++c)
        CHECK(mmp.marginals[c] == doctest::Approx(crop_mass[static_cast<std::size_t>(c)]).epsilon(1e-9));

      const auto mjp = predict_mjp(m, x);
      const std::size_t best = oracles::naive_argmax(want);
      CHECK(mjp.crop == m.classes[best].crop);
      CHECK(mjp.cell.crop == m.classes[best].crop);
      CHECK(mjp.cell.stage == *m.classes[best].stage);
    }
  }
}

TEST_CASE("a two-crop joint posterior splits 58/42 at the engineered probe") {
  Dataset ds;
  ds.grid = fixtures::grid2();
  fixtures::add_corner_class(ds, CropLabel::Corn, StageLabel::Critical, 1.0, 0.0);
  fixtures::add_corner_class(ds, CropLabel::Soybeans, StageLabel::Critical, -1.0, 0.0);
  const auto m = fit_discriminant(ds, LabelingMode::JointCropStage, DiscriminantKind::QDA,
                                  ShrinkageParam{0.0});
  // With unit covariances and means +-1, P(Corn | x) = sigmoid(2*x0); probe
  // where the posterior splits 0.58 / 0.42.
  const Eigen::Vector2d x = probe(0.5 * std::log(0.58 / 0.42));
  const auto table = joint_posterior_table(m, x);
  CHECK(table.cell(StageLabel::Critical, CropLabel::Corn) == doctest::Approx(0.58).epsilon(1e-12));
  CHECK(table.cell(StageLabel::Critical, CropLabel::Soybeans) == doctest::Approx(0.42).epsilon(1e-12));
  CHECK(table.probabilities.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(predict_mmp(m, x).crop == CropLabel::Corn);
  CHECK(predict_mjp(m, x).crop == CropLabel::Corn);
}

TEST_CASE("stage mass within one crop marginalizes to certainty") {
  Dataset ds;
  ds.grid = fixtures::grid2();
  fixtures::add_corner_class(ds, CropLabel::Corn, StageLabel::Critical, 1.0, 0.0);
  fixtures::add_corner_class(ds, CropLabel::Corn, StageLabel::MatureSenesc, -1.0, 0.0);
  const auto m = fit_discriminant(ds, LabelingMode::JointCropStage, DiscriminantKind::QDA,
                                  ShrinkageParam{0.0});
  // Probe where the stages split 0.48 / 0.52 within the single crop.
  const Eigen::Vector2d x = probe(0.5 * std::log(0.48 / 0.52));
  const auto table = joint_posterior_table(m, x);
  CHECK(table.cell(StageLabel::Critical, CropLabel::Corn) == doctest::Approx(0.48).epsilon(1e-12));
  CHECK(table.cell(StageLabel::MatureSenesc, CropLabel::Corn) == doctest::Approx(0.52).epsilon(1e-12));

  const auto mmp = predict_mmp(m, x);
  CHECK(mmp.crop == CropLabel::Corn);
  CHECK(mmp.marginals[static_cast<int>(CropLabel::Corn)] == doctest::Approx(1.0).epsilon(1e-12));

  // The joint rule picks the heavier stage cell of the same crop.
  const auto mjp = predict_mjp(m, x);
  CHECK(mjp.crop == CropLabel::Corn);
  CHECK(mjp.cell.stage == StageLabel::MatureSenesc);
}

TEST_CASE("a three-crop posterior splits 23/44/33 at the engineered probe") {
  Dataset ds;
  ds.grid = fixtures::grid2();
  const double a = std::sqrt(2.0 * std::log(0.44 / 0.23));
  const double b = std::sqrt(2.0 * std::log(0.44 / 0.33));
  fixtures::add_corner_class(ds, CropLabel::Corn, StageLabel::Critical, a, 0.0);
  fixtures::add_corner_class(ds, CropLabel::Soybeans, StageLabel::Critical, 0.0, 0.0);
  fixtures::add_corner_class(ds, CropLabel::WinterWheat, StageLabel::Critical, -b, 0.0);
  const auto m = fit_discriminant(ds, LabelingMode::JointCropStage, DiscriminantKind::QDA,
                                  ShrinkageParam{0.0});

  const Eigen::Vector2d x = probe(0.0);
  const auto table = joint_posterior_table(m, x);
  CHECK(table.cell(StageLabel::Critical, CropLabel::Corn) == doctest::Approx(0.23).epsilon(1e-12));
  CHECK(table.cell(StageLabel::Critical, CropLabel::Soybeans) == doctest::Approx(0.44).epsilon(1e-12));
  CHECK(table.cell(StageLabel::Critical, CropLabel::WinterWheat) == doctest::Approx(0.33).epsilon(1e-12));

  CHECK(predict_mmp(m, x).crop == CropLabel::Soybeans);
  const auto mjp = predict_mjp(m, x);
  CHECK(mjp.crop == CropLabel::Soybeans);
  CHECK(mjp.cell.stage == StageLabel::Critical);
}

TEST_CASE("unrealized joint cells have exactly zero posterior and no support") {
  Dataset ds;
  ds.grid = fixtures::grid2();
  fixtures::add_corner_class(ds, CropLabel::Corn, StageLabel::Critical, 0.0, 0.0);
  fixtures::add_corner_class(ds, CropLabel::Rice, StageLabel::Harvest, 5.0, 0.0);
  const auto m = fit_discriminant(ds, LabelingMode::JointCropStage, DiscriminantKind::LDA,
                                  ShrinkageParam{0.0});
  const auto table = joint_posterior_table(m, probe(2.0, 1.0));
  int supported = 0;
  for (StageLabel s : all_stages())
    for (CropLabel c : all_crops()) {
      if (table.supported(s, c)) {
        ++supported;
      } else {
        CHECK(table.cell(s, c) == 0.0);
      }
    }
  CHECK(supported == 2);
  CHECK(table.supported(StageLabel::Critical, CropLabel::Corn));
  CHECK(table.supported(StageLabel::Harvest, CropLabel::Rice));
}

TEST_CASE("a single supported class takes all the mass") {
  Dataset ds;
  ds.grid = fixtures::grid2();
  fixtures::add_corner_class(ds, CropLabel::Cotton, StageLabel::EarlyMid, 0.0, 0.0);
  const auto m = fit_discriminant(ds, LabelingMode::JointCropStage, DiscriminantKind::QDA,
                                  ShrinkageParam{0.0});
  const auto table = joint_posterior_table(m, probe(100.0, -3.0));
  CHECK(table.cell(StageLabel::EarlyMid, CropLabel::Cotton) == 1.0);
  CHECK(predict_mmp(m, probe(-50.0)).crop == CropLabel::Cotton);
}

TEST_CASE("exact ties break to the alphabetically first crop") {
  Dataset ds;
  ds.grid = fixtures::grid2();
  fixtures::add_corner_class(ds, CropLabel::Soybeans, StageLabel::Critical, 1.0, 0.0);
  fixtures::add_corner_class(ds, CropLabel::Corn, StageLabel::Critical, -1.0, 0.0);
  const auto m = fit_discriminant(ds, LabelingMode::CropOnly, DiscriminantKind::QDA,
                                  ShrinkageParam{0.0});
  // The probe is equidistant from both means, so the posteriors tie exactly.
  const Eigen::VectorXd lp = class_log_posteriors(m, probe(0.0));
  CHECK(lp[0] == lp[1]);
  CHECK(predict_direct(m, probe(0.0)) == CropLabel::Corn);
}

TEST_CASE("joint ties break by crop, then by stage order") {
  Dataset ds;
  ds.grid = fixtures::grid2();
  fixtures::add_corner_class(ds, CropLabel::Corn, StageLabel::Harvest, 1.0, 0.0);
  fixtures::add_corner_class(ds, CropLabel::Corn, StageLabel::EmergeVEarly, -1.0, 0.0);
  const auto same_crop = fit_discriminant(ds, LabelingMode::JointCropStage, DiscriminantKind::QDA,
                                          ShrinkageParam{0.0});
  const auto tie1 = predict_mjp(same_crop, probe(0.0));
  CHECK(tie1.cell.stage == StageLabel::EmergeVEarly);  // earlier stage wins

  Dataset ds2;
  ds2.grid = fixtures::grid2();
  fixtures::add_corner_class(ds2, CropLabel::Soybeans, StageLabel::EmergeVEarly, 1.0, 0.0);
  fixtures::add_corner_class(ds2, CropLabel::Corn, StageLabel::Harvest, -1.0, 0.0);
  const auto cross_crop = fit_discriminant(ds2, LabelingMode::JointCropStage, DiscriminantKind::QDA,
                                           ShrinkageParam{0.0});
  const auto tie2 = predict_mjp(cross_crop, probe(0.0));
  CHECK(tie2.crop == CropLabel::Corn);  // crop order dominates stage order
}

TEST_CASE("pooled and per-class models agree when covariances match") {
  Dataset ds;
  ds.grid = fixtures::grid2();
  fixtures::add_corner_class(ds, CropLabel::Corn, StageLabel::Late, 0.0, 0.0);
  fixtures::add_corner_class(ds, CropLabel::Rice, StageLabel::Late, 3.0, 1.0);
  fixtures::add_corner_class(ds, CropLabel::Cotton, StageLabel::Late, -2.0, 4.0);
  const auto lda = fit_discriminant(ds, LabelingMode::CropOnly, DiscriminantKind::LDA,
                                    ShrinkageParam{0.0});
  const auto qda = fit_discriminant(ds, LabelingMode::CropOnly, DiscriminantKind::QDA,
                                    ShrinkageParam{0.0});
  std::mt19937_64 rng(79);
  std::uniform_real_distribution<double> unif(-6.0, 8.0);
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::Vector2d x = probe(unif(rng), unif(rng));
    const Eigen::VectorXd a = class_log_posteriors(lda, x);
    const Eigen::VectorXd b = class_log_posteriors(qda, x);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("posteriors at zero shrinkage are invariant to uniform rescaling") {
  Dataset base = fixtures::separable_dataset(
      {{CropLabel::Corn, StageLabel::Late}, {CropLabel::Rice, StageLabel::Late}}, 20, 3, 0.8);
  Dataset scaled = base;
  for (auto& rec : scaled.records) rec.reflectance *= 100.0;

  const auto m1 = fit_discriminant(base, LabelingMode::CropOnly, DiscriminantKind::QDA,
                                   ShrinkageParam{0.0});
  const auto m2 = fit_discriminant(scaled, LabelingMode::CropOnly, DiscriminantKind::QDA,
                                   ShrinkageParam{0.0});
  std::mt19937_64 rng(83);
  std::uniform_real_distribution<double> unif(-2.0, 12.0);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::Vector2d x = probe(unif(rng), unif(rng));
    const Eigen::VectorXd a = class_log_posteriors(m1, x);
    const Eigen::VectorXd b = class_log_posteriors(m2, Eigen::Vector2d(100.0 * x));
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("relabeling crops permutes the predictions") {
  Dataset ds = fixtures::separable_dataset(
      {{CropLabel::Corn, StageLabel::Late}, {CropLabel::Soybeans, StageLabel::Late}}, 16, 9, 0.5);
  Dataset swapped = ds;
  for (auto& rec : swapped.records)
    rec.crop = (rec.crop == CropLabel::Corn) ? CropLabel::Soybeans : CropLabel::Corn;

  const auto m = fit_discriminant(ds, LabelingMode::CropOnly, DiscriminantKind::LDA,
                                  ShrinkageParam{0.1});
  const auto ms = fit_discriminant(swapped, LabelingMode::CropOnly, DiscriminantKind::LDA,
                                   ShrinkageParam{0.1});
  std::mt19937_64 rng(89);
  std::uniform_real_distribution<double> unif(-2.0, 12.0);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::Vector2d x = probe(unif(rng), unif(rng));
    const CropLabel a = predict_direct(m, x);
    const CropLabel b = predict_direct(ms, x);
    CHECK(a != b);  // the two crops trade places
  }
}

TEST_CASE("empirical priors reflect the class frequencies") {
  Dataset ds;
  ds.grid = fixtures::grid2();
  fixtures::add_corner_class(ds, CropLabel::Corn, StageLabel::Late, 0.0, 0.0);
  fixtures::add_corner_class(ds, CropLabel::Corn, StageLabel::Late, 0.0, 0.0);
  fixtures::add_corner_class(ds, CropLabel::Corn, StageLabel::Late, 0.0, 0.0);
  fixtures::add_corner_class(ds, CropLabel::Rice, StageLabel::Late, 8.0, 0.0);

  const auto uniform = fit_discriminant(ds, LabelingMode::CropOnly, DiscriminantKind::LDA,
                                        ShrinkageParam{0.0}, PriorMode::Uniform);
  CHECK(uniform.priors == std::vector<double>{0.5, 0.5});

  const auto empirical = fit_discriminant(ds, LabelingMode::CropOnly, DiscriminantKind::LDA,
                                          ShrinkageParam{0.0}, PriorMode::Empirical);
  CHECK(empirical.priors[0] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(empirical.priors[1] == doctest::Approx(0.25).epsilon(1e-15));

  // With identical class-conditionals the prior decides; probe far from both
  // means so the densities stay equal.
  Dataset tied;
  tied.grid = fixtures::grid2();
  fixtures::add_corner_class(tied, CropLabel::Rice, StageLabel::Late, 0.0, 0.0);
  fixtures::add_corner_class(tied, CropLabel::Corn, StageLabel::Late, 0.0, 0.0);
  fixtures::add_corner_class(tied, CropLabel::Rice, StageLabel::Late, 0.0, 0.0);
  const auto tied_model = fit_discriminant(tied, LabelingMode::CropOnly, DiscriminantKind::LDA,
                                           ShrinkageParam{0.0}, PriorMode::Empirical);
  CHECK(predict_direct(tied_model, probe(4.0, -2.0)) == CropLabel::Rice);
}

TEST_CASE("mode mismatches and bad probes are rejected") {
  Dataset ds;
  ds.grid = fixtures::grid2();
  fixtures::add_corner_class(ds, CropLabel::Corn, StageLabel::Late, 0.0, 0.0);
  fixtures::add_corner_class(ds, CropLabel::Rice, StageLabel::Harvest, 5.0, 0.0);

  const auto crop_model = fit_discriminant(ds, LabelingMode::CropOnly, DiscriminantKind::LDA,
                                           ShrinkageParam{0.0});
  const auto joint_model = fit_discriminant(ds, LabelingMode::JointCropStage, DiscriminantKind::LDA,
                                            ShrinkageParam{0.0});

  CHECK_THROWS_AS(joint_posterior_table(crop_model, probe(0.0)), UsageError);
  CHECK_THROWS_AS(predict_mmp(crop_model, probe(0.0)), UsageError);
  CHECK_THROWS_AS(predict_mjp(crop_model, probe(0.0)), UsageError);
  CHECK_THROWS_AS(predict_direct(joint_model, probe(0.0)), UsageError);
  CHECK_THROWS_AS(class_log_posteriors(crop_model, Eigen::VectorXd::Zero(3)), DataError);
  CHECK_NOTHROW(predict_direct(crop_model, probe(0.0)));
  CHECK_NOTHROW(predict_mjp(joint_model, probe(0.0)));
}

TEST_CASE("marginal and joint rules agree when stages are unambiguous") {
  // Each crop occupies exactly one stage, so the stage marginal within a crop
  // is a single cell and the two decision rules coincide.
  Dataset ds = fixtures::separable_dataset({{CropLabel::Corn, StageLabel::EarlyMid},
                                            {CropLabel::Rice, StageLabel::Critical},
                                            {CropLabel::WinterWheat, StageLabel::Harvest}},
                                           12, 17, 1.0);
  const auto m = fit_discriminant(ds, LabelingMode::JointCropStage, DiscriminantKind::QDA,
                                  ShrinkageParam{0.05});
  std::mt19937_64 rng(97);
  std::uniform_real_distribution<double> unif(-3.0, 23.0);
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::Vector2d x = probe(unif(rng), unif(rng));
    CHECK(predict_mmp(m, x).crop == predict_mjp(m, x).crop);
  }
}

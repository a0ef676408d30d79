#include <cmath>
#include <vector>

#include "difflab/ddpm.hpp"
#include "difflab/error.hpp"
#include "difflab/stats.hpp"
#include "gtest/gtest.h"

namespace difflab {
namespace {

GaussianMixture asymmetric_mixture() {
  return GaussianMixture::from_1d({0.3, 0.7}, {-2.0, 2.0}, {0.2, 1.0});
}

GaussianMixture symmetric_mixture() {
  return GaussianMixture::from_1d({0.5, 0.5}, {-3.0, 3.0}, {1.0, 1.0});
}

std::vector<double> column(const Mat& x, Eigen::Index j = 0) {
  return std::vector<double>(x.col(j).data(), x.col(j).data() + x.rows());
}

double positive_fraction(const Mat& x) {
  return (x.col(0).array() > 0.0).cast<double>().mean();
}

TEST(PosteriorParamsTest, FirstStepCollapsesOntoX0) {
  const auto s = NoiseSchedule::linear(100, 1e-4, 0.02);
  const auto p = posterior_params(s, 1);
  EXPECT_EQ(p.coef_xt, 0.0);
  EXPECT_DOUBLE_EQ(p.coef_x0, 1.0);
  EXPECT_EQ(p.variance, 0.0);
}

TEST(PosteriorParamsTest, ConstantAlphaValues) {
  const auto s = NoiseSchedule::constant(20, 0.1);
  EXPECT_NEAR(posterior_params(s, 2).variance, 0.1 * 0.1 / (1.0 - 0.81), 1e-12);
  EXPECT_NEAR(posterior_params(s, 2).variance, 0.052632, 1e-6);
  // Going from T down to 1 the weight on x_t shrinks and the weight on x_0 grows.
  for (std::size_t t = 20; t >= 2; --t) {
    const auto hi = posterior_params(s, t), lo = posterior_params(s, t - 1);
    EXPECT_GT(hi.coef_xt, lo.coef_xt);
    EXPECT_LT(hi.coef_x0, lo.coef_x0);
    EXPECT_GE(hi.variance, 0.0);
    EXPECT_LE(hi.variance, s.beta(t));
  }
  EXPECT_THROW(posterior_params(s, 0), std::invalid_argument);
  EXPECT_THROW(posterior_params(s, 21), std::invalid_argument);
}

TEST(PosteriorParamsTest, NoiseParameterizationOfTheMean) {
  const auto s = NoiseSchedule::linear(200, 1e-4, 0.05);
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto t = static_cast<std::size_t>(rng.uniform_int(2, 200));
    const double x0 = rng.normal() * 2.0, eps = rng.normal();
    const double ab = s.alpha_bar(t), a = s.alpha(t);
    const double xt = std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
    const auto p = posterior_params(s, t);
    const double via_x0 = p.coef_xt * xt + p.coef_x0 * x0;
    const double via_eps = xt / std::sqrt(a) - (1.0 - a) / (std::sqrt(1.0 - ab) * std::sqrt(a)) * eps;
    EXPECT_NEAR(via_x0, via_eps, 1e-12);
    EXPECT_GE(p.coef_xt, 0.0);
    EXPECT_GE(p.coef_x0, 0.0);
  }
}

TEST(ForwardSampleTest, TimeZeroIsIdentity) {
  const auto s = NoiseSchedule::constant(10, 0.03);
  Rng rng(2);
  Vec x(2);
  x << 0.3, -1.2;
  EXPECT_EQ(forward_sample(x, 0, s, rng), x);
  EXPECT_THROW(forward_sample(x, 11, s, rng), std::invalid_argument);
}

TEST(ForwardSampleTest, OneShotMatchesDiffusedMixture) {
  const auto g = asymmetric_mixture();
  const auto s = NoiseSchedule::constant(50, 0.03);
  Rng rng(3);
  const Mat x0 = g.sample(100000, rng);
  StreamBank bank(4, 100000);
  const Mat xt = forward_sample(x0, 50, s, bank);
  const auto target = diffused_mixture(g, std::pow(0.97, 50));
  EXPECT_LT(ks_statistic(column(xt), [&](double x) { return target.cdf(x); }), 0.02);
}

TEST(ForwardSampleTest, ChainedMatchesOneShot) {
  const auto g = asymmetric_mixture();
  const auto s = NoiseSchedule::constant(50, 0.03);
  Rng rng(5);
  const Mat x0 = g.sample(100000, rng);
  StreamBank b1(6, 100000), b2(7, 100000);
  const Mat one = forward_sample(x0, 50, s, b1);
  const Mat chained = forward_chain(x0, 50, s, b2);
  EXPECT_LT(ks_two_sample(column(one), column(chained)), 0.02);
}

TEST(ForwardSampleTest, PreservesUnitVariance) {
  const auto s = NoiseSchedule::linear(1000, 1e-4, 0.02);
  Rng rng(8);
  Mat x0(50000, 2);
  for (Eigen::Index i = 0; i < x0.rows(); ++i) {
    // Unit variance but far from Gaussian.
    x0(i, 0) = rng.uniform() < 0.5 ? -1.0 : 1.0;
    x0(i, 1) = std::sqrt(3.0) * rng.uniform(-1.0, 1.0);
  }
  StreamBank bank(9, 50000);
  for (std::size_t t : {1, 10, 100, 500, 1000}) {
    const Mat xt = forward_sample(x0, t, s, bank);
    for (Eigen::Index j = 0; j < 2; ++j)
      EXPECT_NEAR(moments(column(xt, j)).variance, 1.0, 0.02) << "t=" << t;
  }
}

TEST(ForwardTrajectoryTest, RecordsEveryStrideAndEndpoints) {
  const auto s = NoiseSchedule::constant(10, 0.05);
  Mat x0 = Mat::Zero(4, 1);
  const auto e = forward_trajectory(x0, s, 11, {5});
  ASSERT_EQ(e.times.size(), 3u);
  EXPECT_EQ(e.times.front(), 0.0);
  EXPECT_EQ(e.times.back(), 10.0);
  e.trajectory(2).validate();
  // Chained draws reproduce forward_chain with the same streams.
  StreamBank bank(11, 4);
  EXPECT_EQ(e.final(), forward_chain(x0, 10, s, bank));
}

DdpmModel oracle_x0_model(const Vec& x0, const NoiseSchedule& s) {
  return {s, Prediction::kX0, [x0](const Mat& x, std::size_t) {
            return Mat(x0.transpose().replicate(x.rows(), 1));
          }};
}

TEST(TrainingLossTest, PerfectAndZeroPredictors) {
  const auto s = NoiseSchedule::linear(100, 1e-4, 0.02);
  Vec x0(2);
  x0 << 1.5, -0.5;
  Rng rng(12);
  for (std::size_t t : {1, 2, 50, 100}) {
    EXPECT_EQ(training_loss(oracle_x0_model(x0, s), x0, t, rng), 0.0);
    EXPECT_EQ(training_loss(oracle_x0_model(x0, s), x0, t, rng, LossWeighting::kElbo), 0.0);
    DdpmModel zero{s, Prediction::kX0,
                   [](const Mat& x, std::size_t) { return Mat(Mat::Zero(x.rows(), x.cols())); }};
    EXPECT_NEAR(training_loss(zero, x0, t, rng, LossWeighting::kElbo),
                loss_weight(s, t, Prediction::kX0) * x0.squaredNorm(), 1e-12);
    EXPECT_NEAR(training_loss(zero, x0, t, rng), x0.squaredNorm(), 1e-12);
  }
}

TEST(TrainingLossTest, ElboWeightFormula) {
  const auto s = NoiseSchedule::constant(10, 0.1);
  // w_t = (1 - a)^2 abar_{t-1} / (2 var_q (1 - abar_t)^2) at t = 3.
  const double a = 0.9, ab = 0.729, abp = 0.81;
  const double var = 0.1 * (1 - abp) / (1 - ab);
  EXPECT_NEAR(loss_weight(s, 3, Prediction::kX0),
              0.01 * abp / (2 * var * (1 - ab) * (1 - ab)), 1e-12);
  EXPECT_NEAR(loss_weight(s, 3, Prediction::kEps), 0.01 / (2 * var * a * (1 - ab)), 1e-12);
  EXPECT_TRUE(std::isfinite(loss_weight(s, 1, Prediction::kX0)));
}

TEST(TrainDdpmTest, LinearEpsPredictorOnStandardNormal) {
  const auto s = NoiseSchedule::linear(100, 1e-4, 0.05);
  const std::size_t t = 40;
  Rng rng(13);
  const Mat data = GaussianMixture::standard_normal(1).sample(20000, rng);
  Mlp net({1, {}, 1, true});
  DdpmTrainConfig cfg;
  cfg.steps = 3000;
  cfg.batch = 256;
  cfg.learning_rate = 1e-2;
  cfg.fixed_t = t;
  train_ddpm(net, data, s, cfg, rng);
  EXPECT_NEAR(net.weight(0)(0, 0), std::sqrt(1.0 - s.alpha_bar(t)), 0.02);
}

TEST(TrainDdpmTest, RejectsShapeMismatch) {
  const auto s = NoiseSchedule::constant(10, 0.1);
  Rng rng(14);
  Mlp net({2, {4}, 2, true});
  EXPECT_THROW(train_ddpm(net, Mat::Zero(10, 1), s, {}, rng), std::invalid_argument);
}

TEST(AncestralSampleTest, SingleStepReturnsPrediction) {
  const auto s = NoiseSchedule::constant(1, 0.3);
  Vec target(2);
  target << 0.25, -4.0;
  for (auto mode : {Prediction::kX0, Prediction::kEps}) {
    DdpmModel m = oracle_x0_model(target, s);
    if (mode == Prediction::kEps) {
      // eps consistent with x_1 = sqrt(a) target + sqrt(1 - a) eps.
      m.mode = mode;
      m.predictor = [target, s](const Mat& x, std::size_t t) {
        return Mat((x.rowwise() - std::sqrt(s.alpha_bar(t)) * target.transpose()) /
                   std::sqrt(1.0 - s.alpha_bar(t)));
      };
    }
    const auto e = ancestral_sample(m, 5, 2, 15);
    for (Eigen::Index i = 0; i < 5; ++i)
      EXPECT_LT((e.final().row(i).transpose() - target).norm(), 1e-12);
  }
}

TEST(AncestralSampleTest, PosteriorMeanOracleReproducesMixture) {
  const auto s = NoiseSchedule::linear(1000, 1e-4, 0.02);
  const auto g = asymmetric_mixture();
  const DdpmModel m{s, Prediction::kX0, mixture_oracle(g, s, Prediction::kX0)};
  const auto e = ancestral_sample(m, 10000, 1, 16);
  const auto xs = column(e.final());
  EXPECT_LT(wasserstein1_to_cdf(xs, [&](double x) { return g.cdf(x); }, -8, 8), 0.1);
}

TEST(AncestralSampleTest, NoiseOracleRecoversModeMasses) {
  const auto s = NoiseSchedule::linear(1000, 1e-4, 0.02);
  const auto g = symmetric_mixture();
  const DdpmModel m{s, Prediction::kEps, mixture_oracle(g, s, Prediction::kEps)};
  const auto e = ancestral_sample(m, 10000, 1, 17);
  EXPECT_NEAR(positive_fraction(e.final()), 0.5, 0.03);
  EXPECT_LT(wasserstein1_to_cdf(column(e.final()), [&](double x) { return g.cdf(x); }, -10, 10),
            0.1);
}

TEST(AncestralSampleTest, DeterministicAndRecorded) {
  const auto s = NoiseSchedule::linear(50, 1e-3, 0.1);
  const auto g = symmetric_mixture();
  const DdpmModel m{s, Prediction::kEps, mixture_oracle(g, s, Prediction::kEps)};
  const auto a = ancestral_sample(m, 64, 1, 18, {10});
  const auto b = ancestral_sample(m, 64, 1, 18, {10});
  ASSERT_EQ(a.frames.size(), 6u);
  for (std::size_t k = 0; k < a.frames.size(); ++k) EXPECT_EQ(a.frames[k], b.frames[k]);
  EXPECT_EQ(a.times.front(), 50.0);
  EXPECT_EQ(a.times.back(), 0.0);
  a.trajectory(3).validate();
  const auto c = ancestral_sample(m, 64, 1, 19);
  EXPECT_NE(a.final(), c.final());
}

TEST(AncestralSampleTest, NonFiniteStateReportsStep) {
  const auto s = NoiseSchedule::constant(10, 0.1);
  const DdpmModel m{s, Prediction::kEps, [](const Mat& x, std::size_t t) {
                      Mat out = Mat::Zero(x.rows(), x.cols());
                      if (t == 7) out(0, 0) = std::nan("");
                      return out;
                    }};
  try {
    ancestral_sample(m, 3, 1, 20);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_EQ(e.step(), 4u);
  }
}

}  // namespace
}  // namespace difflab

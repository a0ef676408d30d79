#include <cmath>
#include <numbers>
#include <vector>

#include "difflab/analytic.hpp"
#include "difflab/stats.hpp"
#include "gtest/gtest.h"

namespace difflab {
namespace {

Vec v1(double x) { return Vec::Constant(1, x); }

GaussianMixture forward_example() {
  return GaussianMixture::from_1d({0.3, 0.7}, {-2.0, 2.0}, {0.2, 1.0});
}

GaussianMixture langevin_example() {
  return GaussianMixture::from_1d({0.6, 0.4}, {2.0, -2.0}, {0.5, 0.2});
}

double direct_pdf(double x, const std::vector<double>& w, const std::vector<double>& m,
                  const std::vector<double>& s) {
  double acc = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k)
    acc += w[k] * std::exp(-0.5 * std::pow((x - m[k]) / s[k], 2)) /
           (s[k] * std::sqrt(2 * std::numbers::pi));
  return acc;
}

TEST(MixtureLogPdfTest, StandardNormalMode) {
  EXPECT_NEAR(mixture_log_pdf(GaussianMixture::standard_normal(1), v1(0.0)), -0.918939,
              1e-6);
}

TEST(MixtureLogPdfTest, SymmetricPairIsEven) {
  auto g = GaussianMixture::from_1d({0.5, 0.5}, {-1.5, 1.5}, {0.7, 0.7});
  for (double x : {0.1, 0.8, 2.5, 7.0})
    EXPECT_NEAR(mixture_log_pdf(g, v1(x)), mixture_log_pdf(g, v1(-x)), 1e-13);
}

TEST(MixtureLogPdfTest, ForwardExampleMatchesDirectSum) {
  const double direct = direct_pdf(2.0, {0.3, 0.7}, {-2.0, 2.0}, {0.2, 1.0});
  EXPECT_NEAR(mixture_log_pdf(forward_example(), v1(2.0)), std::log(direct), 1e-12);
}

TEST(MixtureLogPdfTest, FarTailStaysFinite) {
  const double lp = mixture_log_pdf(langevin_example(), v1(80.0));
  EXPECT_TRUE(std::isfinite(lp));
  EXPECT_TRUE(mixture_score(langevin_example(), v1(-200.0)).allFinite());
}

TEST(MixtureLogPdfTest, IntegratesToOne) {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const int k = static_cast<int>(rng.uniform_int(1, 4));
    std::vector<double> w(k), m(k), s(k);
    double tot = 0.0;
    for (auto& x : w) tot += (x = rng.uniform(0.1, 1.0));
    for (auto& x : w) x /= tot;
    double sum = 0.0;
    for (int i = 0; i + 1 < k; ++i) sum += w[i];
    w.back() = 1.0 - sum;
    for (auto& x : m) x = rng.uniform(-3, 3);
    for (auto& x : s) x = rng.uniform(0.2, 2.0);
    auto g = GaussianMixture::from_1d(w, m, s);
    double lo = 1e9, hi = -1e9;
    for (int i = 0; i < k; ++i) {
      lo = std::min(lo, m[i] - 10 * s[i]);
      hi = std::max(hi, m[i] + 10 * s[i]);
    }
    const int n = 200000;
    const double h = (hi - lo) / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i)
      acc += (i == 0 || i == n ? 0.5 : 1.0) * std::exp(mixture_log_pdf(g, v1(lo + i * h)));
    EXPECT_NEAR(acc * h, 1.0, 1e-6);
  }
}

TEST(MixtureTest, RejectsBadParameters) {
  EXPECT_THROW(GaussianMixture::from_1d({0.5, 0.4}, {0, 1}, {1, 1}), std::invalid_argument);
  EXPECT_THROW(GaussianMixture::from_1d({0.5, 0.5}, {0, 1}, {1, 0}), std::invalid_argument);
  EXPECT_THROW(GaussianMixture::from_1d({1.5, -0.5}, {0, 1}, {1, 1}), std::invalid_argument);
  EXPECT_THROW(mixture_log_pdf(forward_example(), Vec(Vec::Zero(2))), std::invalid_argument);
}

TEST(MixtureScoreTest, SingleGaussian) {
  auto g = GaussianMixture::from_1d({1.0}, {1.0}, {1.0});
  EXPECT_NEAR(mixture_score(g, v1(3.0))[0], -2.0, 1e-14);
}

TEST(MixtureScoreTest, ZeroAtSymmetryPoint) {
  auto g = GaussianMixture::from_1d({0.5, 0.5}, {-3.0, 3.0}, {1.0, 1.0});
  EXPECT_NEAR(mixture_score(g, v1(0.0))[0], 0.0, 1e-14);
}

double fd_score(const GaussianMixture& g, double x, double h) {
  return (mixture_log_pdf(g, v1(x + h)) - mixture_log_pdf(g, v1(x - h))) / (2 * h);
}

TEST(MixtureScoreTest, LangevinExampleMatchesFiniteDifference) {
  EXPECT_NEAR(mixture_score(langevin_example(), v1(1.0))[0],
              fd_score(langevin_example(), 1.0, 1e-4), 1e-6);
}

TEST(MixtureScoreTest, RandomMixturesMatchFiniteDifference) {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const double w = rng.uniform(0.1, 0.9);
    auto g = GaussianMixture::from_1d({w, 1.0 - w}, {rng.uniform(-2, 2), rng.uniform(-2, 2)},
                                      {rng.uniform(0.7, 2.0), rng.uniform(0.7, 2.0)});
    const double x = rng.uniform(-4, 4);
    EXPECT_NEAR(mixture_score(g, v1(x))[0], fd_score(g, x, 1e-4), 1e-6);
  }
}

TEST(MixtureScoreTest, TwoDimensionalGradient) {
  Mat mu(2, 2);
  mu << 1.0, -1.0, -0.5, 2.0;
  GaussianMixture g({0.4, 0.6}, mu, {0.8, 1.5});
  Vec x(2);
  x << 0.3, 0.7;
  const Vec s = mixture_score(g, x);
  for (int j = 0; j < 2; ++j) {
    Vec up = x, dn = x;
    up[j] += 1e-5;
    dn[j] -= 1e-5;
    EXPECT_NEAR(s[j], (mixture_log_pdf(g, up) - mixture_log_pdf(g, dn)) / 2e-5, 1e-7);
  }
  // Batched and pointwise agree.
  Mat xs(1, 2);
  xs.row(0) = x.transpose();
  EXPECT_NEAR((mixture_score(g, xs).row(0).transpose() - s).norm(), 0.0, 1e-15);
}

TEST(KlGaussiansTest, IdentityIsZero) {
  Vec m(3);
  m << 0.1, -2, 4;
  EXPECT_NEAR(kl_gaussians(m, 0.7, m, 0.7), 0.0, 1e-15);
}

TEST(KlGaussiansTest, UnitShift) {
  EXPECT_NEAR(kl_gaussians(v1(1.0), 1.0, v1(0.0), 1.0), 0.5, 1e-15);
}

TEST(KlGaussiansTest, OptimalEncoderStdIsOne) {
  // Golden-section search over t for KL(N(0, t^2) || N(0, 1)).
  auto f = [](double t) { return kl_gaussians(v1(0.0), t * t, v1(0.0), 1.0); };
  double a = 0.05, b = 5.0;
  const double gr = (std::sqrt(5.0) - 1) / 2;
  for (int i = 0; i < 200; ++i) {
    const double c = b - gr * (b - a), d = a + gr * (b - a);
    (f(c) < f(d) ? b : a) = (f(c) < f(d) ? d : c);
  }
  EXPECT_NEAR(0.5 * (a + b), 1.0, 1e-6);
}

TEST(KlGaussiansTest, NonNegativeAndAdditiveOverDimensions) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec m0 = rng.normal_vec(3), m1 = rng.normal_vec(3);
    const double v0 = rng.uniform(0.1, 3), v1v = rng.uniform(0.1, 3);
    const double kl = kl_gaussians(m0, v0, m1, v1v);
    EXPECT_GE(kl, 0.0);
    double sum = 0.0;
    for (int j = 0; j < 3; ++j) sum += kl_gaussians(v1(m0[j]), v0, v1(m1[j]), v1v);
    EXPECT_NEAR(kl, sum, 1e-12);
    EXPECT_GT(kl, 0.0);
  }
  EXPECT_THROW(kl_gaussians(v1(0), 0.0, v1(0), 1.0), std::invalid_argument);
  EXPECT_THROW(kl_gaussians(v1(0), 1.0, v1(0), -1.0), std::invalid_argument);
}

TEST(DiffusedMixtureTest, IdentityAtAlphaBarOne) {
  auto g = forward_example();
  auto d = diffused_mixture(g, 1.0);
  EXPECT_EQ(d.means(), g.means());
  EXPECT_EQ(d.variances(), g.variances());
  EXPECT_EQ(d.weights(), g.weights());
}

TEST(DiffusedMixtureTest, TendsToStandardNormal) {
  auto d = diffused_mixture(forward_example(), 1e-12);
  for (std::size_t k = 0; k < d.components(); ++k) {
    EXPECT_NEAR(d.means()(static_cast<Eigen::Index>(k), 0), 0.0, 1e-5);
    EXPECT_NEAR(d.variances()[k], 1.0, 1e-11);
  }
  EXPECT_THROW(diffused_mixture(forward_example(), 0.0), std::invalid_argument);
  EXPECT_THROW(diffused_mixture(forward_example(), 1.5), std::invalid_argument);
}

TEST(DiffusedMixtureTest, MonteCarloForwardSamplesMatch) {
  const double ab = std::pow(0.97, 10);
  auto g = forward_example();
  auto d = diffused_mixture(g, ab);
  EXPECT_NEAR(d.means()(0, 0), -2 * std::pow(0.97, 5), 1e-14);
  EXPECT_NEAR(d.means()(1, 0), 2 * std::pow(0.97, 5), 1e-14);
  Rng rng(77);
  const Mat x0 = g.sample(100000, rng);
  std::vector<double> xt(100000);
  for (std::size_t i = 0; i < xt.size(); ++i)
    xt[i] = std::sqrt(ab) * x0(static_cast<Eigen::Index>(i), 0) + std::sqrt(1 - ab) * rng.normal();
  EXPECT_LT(ks_statistic(xt, [&](double x) { return d.cdf(x); }), 0.02);
}

TEST(DiffusedMixtureTest, ComposesAcrossGaps) {
  auto g = forward_example();
  const double as = 0.6, gap = 0.7;
  auto twice = diffused_mixture(diffused_mixture(g, as), gap);
  auto once = diffused_mixture(g, as * gap);
  for (std::size_t k = 0; k < g.components(); ++k) {
    EXPECT_NEAR(twice.means()(static_cast<Eigen::Index>(k), 0),
                once.means()(static_cast<Eigen::Index>(k), 0), 1e-14);
    EXPECT_NEAR(twice.variances()[k], once.variances()[k], 1e-14);
  }
}

TEST(PosteriorMeanTest, TweedieIdentity) {
  // E[x0 | x_t] = (x_t + (1 - ab) grad log p_t(x_t)) / sqrt(ab).
  auto g = forward_example();
  Rng rng(8);
  for (double ab : {0.9, 0.5, 0.05}) {
    Mat xt(50, 1);
    for (Eigen::Index i = 0; i < 50; ++i) xt(i, 0) = rng.uniform(-4, 4);
    const Mat post = mixture_posterior_mean(g, xt, ab);
    const Mat score = mixture_score(diffused_mixture(g, ab), xt);
    const Mat tweedie = (xt + (1 - ab) * score) / std::sqrt(ab);
    EXPECT_LT((post - tweedie).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(KdeScoreTest, SingleCenter) {
  KdeModel kde{Mat::Constant(1, 1, 0.5), 0.3};
  EXPECT_NEAR(kde_score(kde, v1(1.1))[0], -(1.1 - 0.5) / 0.09, 1e-12);
}

TEST(KdeScoreTest, SymmetricCenters) {
  Mat c(4, 1);
  c << -2, -0.5, 0.5, 2;
  KdeModel kde{c, 0.4};
  EXPECT_NEAR(kde_score(kde, v1(0.0))[0], 0.0, 1e-14);
}

TEST(KdeScoreTest, DensityIntegratesToOne) {
  Rng rng(5);
  KdeModel kde{langevin_example().sample(100, rng), 0.3};
  double acc = 0.0;
  const double h = 1e-3;
  for (double x = -8; x <= 8; x += h) acc += std::exp(kde_log_pdf(kde, v1(x))) * h;
  EXPECT_NEAR(acc, 1.0, 1e-3);
}

TEST(KdeScoreTest, TracksMixtureScoreOnHighDensityRegion) {
  auto g = langevin_example();
  Rng rng(21);
  KdeModel kde{g.sample(500, rng), 0.3};
  // The KDE estimates the bandwidth-smoothed law, so the tight comparison is
  // against that; the raw score is compared by correlation.
  auto smoothed = convolved_mixture(g, 0.3);
  std::vector<double> est, raw, smooth;
  for (double x = -3; x <= 3; x += 0.01) {
    if (std::exp(mixture_log_pdf(g, v1(x))) < 0.05) continue;
    est.push_back(kde_score(kde, v1(x))[0]);
    raw.push_back(mixture_score(g, v1(x))[0]);
    smooth.push_back(mixture_score(smoothed, v1(x))[0]);
  }
  Eigen::Map<Vec> e(est.data(), static_cast<Eigen::Index>(est.size()));
  Eigen::Map<Vec> r(raw.data(), static_cast<Eigen::Index>(raw.size()));
  Eigen::Map<Vec> s(smooth.data(), static_cast<Eigen::Index>(smooth.size()));
  EXPECT_LT((e - s).norm() / s.norm(), 0.2);
  const Vec ec = e.array() - e.mean(), rc = r.array() - r.mean();
  EXPECT_GT(ec.dot(rc) / (ec.norm() * rc.norm()), 0.8);
}

}  // namespace
}  // namespace difflab

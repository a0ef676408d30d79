#pragma once

#include <vector>

#include "difflab/rng.hpp"
#include "difflab/types.hpp"

namespace difflab {

// Isotropic Gaussian mixture sum_k w_k N(mu_k, var_k I).
class GaussianMixture {
 public:
  // means: one row per component.
  GaussianMixture(std::vector<double> weights, Mat means, std::vector<double> variances);

  // 1D convenience constructor taking standard deviations.
  static GaussianMixture from_1d(std::vector<double> weights,
                                 std::vector<double> means,
                                 std::vector<double> stddevs);
  static GaussianMixture standard_normal(Eigen::Index d);

  Eigen::Index dim() const { return means_.cols(); }
  std::size_t components() const { return weights_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  const Mat& means() const { return means_; }
  const std::vector<double>& variances() const { return variances_; }

  Mat sample(std::size_t n, Rng& rng) const;
  // Exact CDF, d = 1 only.
  double cdf(double x) const;

 private:
  std::vector<double> weights_;
  Mat means_;
  std::vector<double> variances_;
};

// Equal-weight Gaussian-kernel density estimate with bandwidth h.
struct KdeModel {
  Mat centers;
  double bandwidth = 1.0;

  GaussianMixture as_mixture() const;
};

double mixture_log_pdf(const GaussianMixture& gmm, const Vec& x);
Vec mixture_score(const GaussianMixture& gmm, const Vec& x);

// Row-wise versions for sample batches.
Vec mixture_log_pdf(const GaussianMixture& gmm, const Mat& x);
Mat mixture_score(const GaussianMixture& gmm, const Mat& x);

// KL(N(mu0, var0 I) || N(mu1, var1 I)) in d dimensions.
double kl_gaussians(const Vec& mu0, double var0, const Vec& mu1, double var1);

// Law of sqrt(alpha_bar) x0 + sqrt(1 - alpha_bar) eps with x0 ~ gmm.
GaussianMixture diffused_mixture(const GaussianMixture& gmm, double alpha_bar);

// Law of x0 + noise_std * z with x0 ~ gmm (variance-exploding corruption).
GaussianMixture convolved_mixture(const GaussianMixture& gmm, double noise_std);

Vec kde_score(const KdeModel& kde, const Vec& x);
Mat kde_score(const KdeModel& kde, const Mat& x);
double kde_log_pdf(const KdeModel& kde, const Vec& x);

// Posterior expectations under x_t = sqrt(ab) x0 + sqrt(1 - ab) eps, x0 ~ gmm.
// These are the exact minimizers of the x0- and eps-prediction losses.
Mat mixture_posterior_mean(const GaussianMixture& gmm, const Mat& x_t, double alpha_bar);
Mat mixture_posterior_noise(const GaussianMixture& gmm, const Mat& x_t, double alpha_bar);

}  // namespace difflab

#include "difflab/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "difflab/error.hpp"
#include "difflab/stats.hpp"

namespace difflab {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// log w_k + log N(x | mu_k, var_k I) for every component.
void component_log_terms(const GaussianMixture& g, const double* x,
                         std::vector<double>& out) {
  const Eigen::Index d = g.dim();
  out.resize(g.components());
  for (std::size_t k = 0; k < g.components(); ++k) {
    const double var = g.variances()[k];
    double sq = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double diff = x[j] - g.means()(static_cast<Eigen::Index>(k), j);
      sq += diff * diff;
    }
    const double w = g.weights()[k];
    out[k] = (w > 0.0 ? std::log(w) : -INFINITY) -
             0.5 * static_cast<double>(d) * (kLog2Pi + std::log(var)) - 0.5 * sq / var;
  }
}

double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

// Responsibilities r_k(x), normalized in log space.
void responsibilities(const GaussianMixture& g, const double* x,
                      std::vector<double>& r) {
  component_log_terms(g, x, r);
  const double lse = log_sum_exp(r);
  for (double& v : r) v = std::exp(v - lse);
}

}  // namespace

GaussianMixture::GaussianMixture(std::vector<double> weights, Mat means,
                                 std::vector<double> variances)
    : weights_(std::move(weights)), means_(std::move(means)),
      variances_(std::move(variances)) {
  require(!weights_.empty(), "GaussianMixture: no components");
  require(static_cast<Eigen::Index>(weights_.size()) == means_.rows() &&
              weights_.size() == variances_.size(),
          "GaussianMixture: component count mismatch");
  require(means_.cols() >= 1, "GaussianMixture: dimension must be >= 1");
  double total = 0.0;
  for (double w : weights_) {
    require(w >= 0.0, "GaussianMixture: negative weight");
    total += w;
  }
  require(std::abs(total - 1.0) <= 1e-12, "GaussianMixture: weights must sum to 1");
  for (double v : variances_) require(v > 0.0, "GaussianMixture: variance must be > 0");
}

GaussianMixture GaussianMixture::from_1d(std::vector<double> weights,
                                         std::vector<double> means,
                                         std::vector<double> stddevs) {
  require(means.size() == stddevs.size(), "GaussianMixture::from_1d: size mismatch");
  Mat mu(static_cast<Eigen::Index>(means.size()), 1);
  std::vector<double> var(stddevs.size());
  for (std::size_t k = 0; k < means.size(); ++k) {
    mu(static_cast<Eigen::Index>(k), 0) = means[k];
    var[k] = stddevs[k] * stddevs[k];
  }
  return GaussianMixture(std::move(weights), std::move(mu), std::move(var));
}

GaussianMixture GaussianMixture::standard_normal(Eigen::Index d) {
  return GaussianMixture({1.0}, Mat::Zero(1, d), {1.0});
}

Mat GaussianMixture::sample(std::size_t n, Rng& rng) const {
  Mat out(static_cast<Eigen::Index>(n), dim());
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    double u = rng.uniform();
    std::size_t k = 0;
    while (k + 1 < components() && u >= weights_[k]) {
      u -= weights_[k];
      ++k;
    }
    const double sd = std::sqrt(variances_[k]);
    for (Eigen::Index j = 0; j < dim(); ++j)
      out(i, j) = means_(static_cast<Eigen::Index>(k), j) + sd * rng.normal();
  }
  return out;
}

double GaussianMixture::cdf(double x) const {
  require(dim() == 1, "GaussianMixture::cdf: only defined for d = 1");
  double acc = 0.0;
  for (std::size_t k = 0; k < components(); ++k)
    acc += weights_[k] *
           normal_cdf(x, means_(static_cast<Eigen::Index>(k), 0), std::sqrt(variances_[k]));
  return acc;
}

GaussianMixture KdeModel::as_mixture() const {
  require(centers.rows() >= 1, "KdeModel: need at least one center");
  require(bandwidth > 0.0, "KdeModel: bandwidth must be > 0");
  const auto n = static_cast<std::size_t>(centers.rows());
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  // Renormalize so the weights pass the 1e-12 sum check for any n.
  double s = 0.0;
  for (double x : w) s += x;
  w.back() += 1.0 - s;
  return GaussianMixture(std::move(w), centers,
                         std::vector<double>(n, bandwidth * bandwidth));
}

double mixture_log_pdf(const GaussianMixture& gmm, const Vec& x) {
  require(x.size() == gmm.dim(), "mixture_log_pdf: dimension mismatch");
  std::vector<double> terms;
  component_log_terms(gmm, x.data(), terms);
  return log_sum_exp(terms);
}

Vec mixture_score(const GaussianMixture& gmm, const Vec& x) {
  require(x.size() == gmm.dim(), "mixture_score: dimension mismatch");
  std::vector<double> r;
  responsibilities(gmm, x.data(), r);
  Vec s = Vec::Zero(gmm.dim());
  for (std::size_t k = 0; k < gmm.components(); ++k) {
    const double var = gmm.variances()[k];
    for (Eigen::Index j = 0; j < gmm.dim(); ++j)
      s[j] -= r[k] * (x[j] - gmm.means()(static_cast<Eigen::Index>(k), j)) / var;
  }
  return s;
}

Vec mixture_log_pdf(const GaussianMixture& gmm, const Mat& x) {
  require(x.cols() == gmm.dim(), "mixture_log_pdf: dimension mismatch");
  Vec out(x.rows());
  std::vector<double> terms;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    component_log_terms(gmm, x.row(i).data(), terms);
    out[i] = log_sum_exp(terms);
  }
  return out;
}

Mat mixture_score(const GaussianMixture& gmm, const Mat& x) {
  require(x.cols() == gmm.dim(), "mixture_score: dimension mismatch");
  Mat s = Mat::Zero(x.rows(), x.cols());
  std::vector<double> r;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    responsibilities(gmm, x.row(i).data(), r);
    for (std::size_t k = 0; k < gmm.components(); ++k) {
      const double coef = r[k] / gmm.variances()[k];
      for (Eigen::Index j = 0; j < x.cols(); ++j)
        s(i, j) -= coef * (x(i, j) - gmm.means()(static_cast<Eigen::Index>(k), j));
    }
  }
  return s;
}

double kl_gaussians(const Vec& mu0, double var0, const Vec& mu1, double var1) {
  require(var0 > 0.0 && var1 > 0.0, "kl_gaussians: variances must be > 0");
  require(mu0.size() == mu1.size(), "kl_gaussians: dimension mismatch");
  const double d = static_cast<double>(mu0.size());
  // 1/2 (tr(S1^-1 S0) - d + (m1-m0)^T S1^-1 (m1-m0) + log det S1 / det S0)
  return 0.5 * (d * var0 / var1 - d + (mu1 - mu0).squaredNorm() / var1 +
                d * std::log(var1 / var0));
}

GaussianMixture diffused_mixture(const GaussianMixture& gmm, double alpha_bar) {
  require(alpha_bar > 0.0 && alpha_bar <= 1.0, "diffused_mixture: alpha_bar outside (0,1]");
  std::vector<double> var(gmm.components());
  for (std::size_t k = 0; k < var.size(); ++k)
    var[k] = (1.0 - alpha_bar) + alpha_bar * gmm.variances()[k];
  return GaussianMixture(gmm.weights(), std::sqrt(alpha_bar) * gmm.means(), std::move(var));
}

GaussianMixture convolved_mixture(const GaussianMixture& gmm, double noise_std) {
  require(noise_std >= 0.0, "convolved_mixture: noise_std must be >= 0");
  std::vector<double> var(gmm.components());
  for (std::size_t k = 0; k < var.size(); ++k)
    var[k] = gmm.variances()[k] + noise_std * noise_std;
  return GaussianMixture(gmm.weights(), gmm.means(), std::move(var));
}

Vec kde_score(const KdeModel& kde, const Vec& x) {
  return mixture_score(kde.as_mixture(), x);
}

Mat kde_score(const KdeModel& kde, const Mat& x) {
  return mixture_score(kde.as_mixture(), x);
}

double kde_log_pdf(const KdeModel& kde, const Vec& x) {
  return mixture_log_pdf(kde.as_mixture(), x);
}

Mat mixture_posterior_mean(const GaussianMixture& gmm, const Mat& x_t, double alpha_bar) {
  require(x_t.cols() == gmm.dim(), "mixture_posterior_mean: dimension mismatch");
  const GaussianMixture marg = diffused_mixture(gmm, alpha_bar);
  const double sab = std::sqrt(alpha_bar);
  Mat out = Mat::Zero(x_t.rows(), x_t.cols());
  std::vector<double> r;
  for (Eigen::Index i = 0; i < x_t.rows(); ++i) {
    responsibilities(marg, x_t.row(i).data(), r);
    for (std::size_t k = 0; k < gmm.components(); ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      // E[x0 | x_t, k] = mu_k + sqrt(ab) var_k / v_k (x_t - sqrt(ab) mu_k)
      const double gain = sab * gmm.variances()[k] / marg.variances()[k];
      for (Eigen::Index j = 0; j < x_t.cols(); ++j)
        out(i, j) += r[k] * (gmm.means()(kk, j) +
                             gain * (x_t(i, j) - sab * gmm.means()(kk, j)));
    }
  }
  return out;
}

Mat mixture_posterior_noise(const GaussianMixture& gmm, const Mat& x_t, double alpha_bar) {
  require(alpha_bar < 1.0, "mixture_posterior_noise: alpha_bar must be < 1");
  const Mat x0 = mixture_posterior_mean(gmm, x_t, alpha_bar);
  return (x_t - std::sqrt(alpha_bar) * x0) / std::sqrt(1.0 - alpha_bar);
}

}  // namespace difflab

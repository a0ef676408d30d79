#include "difflab/ddim.hpp"

#include <cmath>

#include "difflab/error.hpp"

namespace difflab {

namespace {

double direction_coef(double alpha_t, double alpha_prev, double sigma) {
  const double r = 1.0 - alpha_prev - sigma * sigma;
  require(sigma >= 0.0, "ddim: sigma must be >= 0");
  // Tolerate rounding when sigma is exactly the largest admissible value.
  require(r >= -1e-14, "ddim: sigma^2 exceeds 1 - alpha_prev");
  return std::sqrt(std::max(r, 0.0)) / std::sqrt(1.0 - alpha_t);
}

void check_alphas(double alpha_t, double alpha_prev) {
  require(alpha_t > 0.0 && alpha_t < 1.0, "ddim: alpha_t must lie in (0, 1)");
  require(alpha_prev > alpha_t && alpha_prev <= 1.0, "ddim: need alpha_t < alpha_prev <= 1");
}

}  // namespace

double ddim_sigma(double alpha_t, double alpha_prev, double eta) {
  check_alphas(alpha_t, alpha_prev);
  require(eta >= 0.0, "ddim_sigma: eta must be >= 0");
  return eta * std::sqrt((1.0 - alpha_prev) / (1.0 - alpha_t)) *
         std::sqrt(1.0 - alpha_t / alpha_prev);
}

Vec ddim_transition_sample(const Vec& x_t, const Vec& x0, double alpha_t, double alpha_prev,
                           double sigma, Rng& rng) {
  check_alphas(alpha_t, alpha_prev);
  const double k = direction_coef(alpha_t, alpha_prev, sigma);
  Vec out = std::sqrt(alpha_prev) * x0 + k * (x_t - std::sqrt(alpha_t) * x0);
  if (sigma > 0.0) out += sigma * rng.normal_vec(x_t.size());
  return out;
}

Mat ddim_transition_sample(const Mat& x_t, const Mat& x0, double alpha_t, double alpha_prev,
                           double sigma, StreamBank& bank) {
  check_alphas(alpha_t, alpha_prev);
  require(static_cast<Eigen::Index>(bank.size()) == x_t.rows(),
          "ddim_transition_sample: one stream per row required");
  const double k = direction_coef(alpha_t, alpha_prev, sigma);
  Mat out = std::sqrt(alpha_prev) * x0 + k * (x_t - std::sqrt(alpha_t) * x0);
  if (sigma > 0.0) out += sigma * bank.normal(x_t.cols());
  return out;
}

std::vector<std::size_t> ddim_subsequence(std::size_t T, std::size_t S) {
  require(S >= 1 && S <= T, "ddim_subsequence: need 1 <= S <= T");
  std::vector<std::size_t> tau(S + 1);
  for (std::size_t i = 0; i <= S; ++i)
    tau[i] = static_cast<std::size_t>(
        std::llround(static_cast<double>(i) * static_cast<double>(T) / static_cast<double>(S)));
  return tau;
}

Mat ddim_step(const DdpmModel& model, const Mat& x_t, std::size_t t, std::size_t t_prev,
              double eta, StreamBank& bank) {
  const auto& s = model.schedule;
  require(t >= 1 && t <= s.steps() && t_prev < t, "ddim_step: need 0 <= t_prev < t <= T");
  const double a = s.alpha_bar(t);
  const double ap = s.alpha_bar(t_prev);
  const Mat pred = model.predictor(x_t, t);
  Mat eps, x0;
  if (model.mode == Prediction::kEps) {
    eps = pred;
    x0 = (x_t - std::sqrt(1.0 - a) * eps) / std::sqrt(a);
  } else {
    x0 = pred;
    eps = (x_t - std::sqrt(a) * x0) / std::sqrt(1.0 - a);
  }
  const double sigma = ddim_sigma(a, ap, eta);
  Mat out = std::sqrt(ap) * x0 + std::sqrt(std::max(1.0 - ap - sigma * sigma, 0.0)) * eps;
  if (sigma > 0.0) out += sigma * bank.normal(x_t.cols());
  return out;
}

Ensemble ddim_sample(const DdpmModel& model, const Mat& x_T, const DdimConfig& config,
                     std::uint64_t seed, RecordOptions record) {
  require(static_cast<bool>(model.predictor), "ddim_sample: missing predictor");
  const std::size_t T = model.schedule.steps();
  const auto tau = ddim_subsequence(T, config.steps == 0 ? T : config.steps);
  const std::size_t S = tau.size() - 1;
  StreamBank bank(seed, static_cast<std::size_t>(x_T.rows()));
  EnsembleRecorder rec(record, seed, S);
  Mat x = x_T;
  rec.offer(0, static_cast<double>(T), x);
  for (std::size_t i = S; i >= 1; --i) {
    x = ddim_step(model, x, tau[i], tau[i - 1], config.eta, bank);
    if (!all_finite(x)) throw NumericError("ddim_sample", S - i + 1);
    rec.offer(S - i + 1, static_cast<double>(tau[i - 1]), x);
  }
  return rec.take();
}

Ensemble ddim_sample(const DdpmModel& model, std::size_t chains, Eigen::Index dim,
                     const DdimConfig& config, std::uint64_t seed, RecordOptions record) {
  StreamBank init(seed, chains, chains);
  return ddim_sample(model, init.normal(dim), config, seed, record);
}

}  // namespace difflab

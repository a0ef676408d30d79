#include "difflab/schedule.hpp"

#include <cmath>
#include <string>

#include "difflab/error.hpp"

namespace difflab {

NoiseSchedule::NoiseSchedule(std::vector<double> betas)
    : betas_(std::move(betas)) {
  require(!betas_.empty(), "NoiseSchedule: need at least one step");
  alpha_bars_.reserve(betas_.size() + 1);
  alpha_bars_.push_back(1.0);
  for (std::size_t i = 0; i < betas_.size(); ++i) {
    const double b = betas_[i];
    require(b > 0.0 && b < 1.0,
            "NoiseSchedule: beta_" + std::to_string(i + 1) + " outside (0,1)");
    alpha_bars_.push_back(alpha_bars_.back() * (1.0 - b));
  }
}

NoiseSchedule NoiseSchedule::linear(std::size_t steps, double beta_min,
                                    double beta_max) {
  require(steps >= 1, "NoiseSchedule::linear: T must be >= 1");
  require(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0,
          "NoiseSchedule::linear: need 0 < beta_min <= beta_max < 1");
  std::vector<double> betas(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double frac =
        steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
    betas[i] = beta_min + frac * (beta_max - beta_min);
  }
  return NoiseSchedule(std::move(betas));
}

NoiseSchedule NoiseSchedule::constant(std::size_t steps, double beta) {
  return linear(steps, beta, beta);
}

double NoiseSchedule::beta(std::size_t t) const {
  require(t >= 1 && t <= steps(), "NoiseSchedule: t out of range");
  return betas_[t - 1];
}

double NoiseSchedule::alpha(std::size_t t) const { return 1.0 - beta(t); }

double NoiseSchedule::alpha_bar(std::size_t t) const {
  require(t <= steps(), "NoiseSchedule: t out of range");
  return alpha_bars_[t];
}

SigmaLadder::SigmaLadder(std::vector<double> sigmas) : sigmas_(std::move(sigmas)) {
  require(!sigmas_.empty(), "SigmaLadder: empty");
  for (std::size_t i = 0; i < sigmas_.size(); ++i) {
    require(sigmas_[i] > 0.0, "SigmaLadder: sigma must be positive");
    if (i > 0)
      require(sigmas_[i] > sigmas_[i - 1],
              "SigmaLadder: sigmas must be strictly increasing");
  }
}

SigmaLadder SigmaLadder::geometric(double sigma_min, double sigma_max,
                                   std::size_t levels) {
  require(levels >= 1, "SigmaLadder::geometric: need >= 1 level");
  require(sigma_min > 0.0, "SigmaLadder::geometric: sigma_min must be > 0");
  if (levels == 1) return SigmaLadder({sigma_min});
  require(sigma_max > sigma_min, "SigmaLadder::geometric: need sigma_max > sigma_min");
  std::vector<double> s(levels);
  const double log_ratio =
      std::log(sigma_max / sigma_min) / static_cast<double>(levels - 1);
  for (std::size_t i = 0; i < levels; ++i)
    s[i] = sigma_min * std::exp(log_ratio * static_cast<double>(i));
  s.back() = sigma_max;
  return SigmaLadder(std::move(s));
}

}  // namespace difflab

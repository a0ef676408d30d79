#pragma once

#include <cstddef>
#include <vector>

namespace difflab {

// beta_t, alpha_t = 1 - beta_t and alpha_bar_t = prod_{i<=t} alpha_i for
// t = 1..T. Index 0 follows the convention alpha_bar_0 = 1.
class NoiseSchedule {
 public:
  explicit NoiseSchedule(std::vector<double> betas);

  static NoiseSchedule linear(std::size_t steps, double beta_min,
                              double beta_max);
  static NoiseSchedule constant(std::size_t steps, double beta);

  std::size_t steps() const { return betas_.size(); }
  double beta(std::size_t t) const;
  double alpha(std::size_t t) const;
  double alpha_bar(std::size_t t) const;

  const std::vector<double>& betas() const { return betas_; }

 private:
  std::vector<double> betas_;
  std::vector<double> alpha_bars_;  // alpha_bars_[0] == 1
};

// Geometric noise ladder sigma_1 < ... < sigma_L, stored smallest first.
class SigmaLadder {
 public:
  explicit SigmaLadder(std::vector<double> sigmas);

  static SigmaLadder geometric(double sigma_min, double sigma_max,
                               std::size_t levels);

  std::size_t size() const { return sigmas_.size(); }
  double operator[](std::size_t i) const { return sigmas_[i]; }
  double smallest() const { return sigmas_.front(); }
  double largest() const { return sigmas_.back(); }
  const std::vector<double>& sigmas() const { return sigmas_; }

 private:
  std::vector<double> sigmas_;
};

}  // namespace difflab

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "difflab/analytic.hpp"
#include "difflab/rng.hpp"
#include "difflab/trajectory.hpp"

namespace difflab {

using OdeRhs = std::function<Vec(double t, const Vec& x)>;

// Uniform grid t0 + k (t1 - t0) / steps, k = 0..steps. t1 < t0 integrates backwards.
struct OdeProblem {
  OdeRhs f;
  Vec x0;
  double t0 = 0.0;
  double t1 = 1.0;
  std::size_t steps = 100;
};

Trajectory euler_solve(const OdeProblem& prob);
Trajectory rk4_solve(const OdeProblem& prob);

enum class SdeKind { kVP, kVE };

// VP: betas beta_1..beta_N in [0, 1). VE: sigmas sigma_0..sigma_N, non-decreasing.
struct SdeParams {
  SdeKind kind = SdeKind::kVP;
  std::vector<double> betas;
  std::vector<double> sigmas;

  static SdeParams vp(std::vector<double> betas);
  static SdeParams ve(std::vector<double> sigmas);
  std::size_t steps() const;
  // Product of (1 - beta_j) for j <= i; VP only.
  double alpha_bar(std::size_t i) const;
};

// Score of the marginal at level i, i = 0..N, batched over rows.
using LevelScore = std::function<Mat(const Mat& x, std::size_t i)>;

// Exact level scores when x_0 follows gmm.
LevelScore vp_mixture_score(const GaussianMixture& gmm, const SdeParams& params);
LevelScore ve_mixture_score(const GaussianMixture& gmm, const SdeParams& params);

// VP: x_i = sqrt(1 - beta_i) x_{i-1} + sqrt(beta_i) z.
// VE: x_i = x_{i-1} + sqrt(sigma_i^2 - sigma_{i-1}^2) z.
// Recorded times are the level indices 0..N.
Ensemble sde_forward(const SdeParams& params, const Mat& x0, std::uint64_t seed,
                     RecordOptions record = {});

// VP: x_{i-1} = (x_i + beta_i s_i(x_i)) / sqrt(1 - beta_i) + sqrt(beta_i) z.
// VE: x_{i-1} = x_i + (sigma_i^2 - sigma_{i-1}^2) s_i(x_i) + sqrt(sigma_i^2 - sigma_{i-1}^2) z.
// Recorded times run N..0.
Ensemble sde_reverse(const SdeParams& params, const LevelScore& score, const Mat& x_N,
                     std::uint64_t seed, RecordOptions record = {});

struct PcConfig {
  std::size_t corrector_steps = 1;  // M
  // Corrector step eps_i = corrector_fraction * (1 - alpha_bar_i) at the level
  // the predictor lands on.
  double corrector_fraction = 0.1;
};

// VP predictor step followed by M Langevin corrections
// x <- x + eps s(x) + sqrt(2 eps) z. M = 0 is exactly sde_reverse.
Ensemble predictor_corrector(const SdeParams& params, const LevelScore& score,
                             const Mat& x_N, const PcConfig& config, std::uint64_t seed,
                             RecordOptions record = {});

}  // namespace difflab

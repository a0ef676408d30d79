#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "difflab/analytic.hpp"
#include "difflab/nn.hpp"
#include "difflab/rng.hpp"
#include "difflab/schedule.hpp"
#include "difflab/trajectory.hpp"

namespace difflab {

// Batched score, one row per point.
using ScoreFn = std::function<Mat(const Mat& x)>;
// Score of the data law smoothed at noise level sigma.
using NoisyScoreFn = std::function<Mat(const Mat& x, double sigma)>;

ScoreFn mixture_score_fn(const GaussianMixture& gmm);
// Exact score of gmm convolved with N(0, sigma^2 I).
NoisyScoreFn convolved_score_fn(const GaussianMixture& gmm);
// An unconditioned network used directly as s_theta(x).
ScoreFn mlp_score_fn(const Mlp& net);

struct LangevinConfig {
  double step_size = 0.05;  // tau
  std::size_t steps = 100;
  bool noise = true;  // false gives plain gradient ascent on log p
};

// Noise injected at each step: the prescribed scale sqrt(2 tau) and the RMS of
// the increment actually added per coordinate.
struct NoiseAudit {
  std::vector<double> scale;
  std::vector<double> injected_rms;
};

// x_{t+1} = x_t + tau s(x_t) + sqrt(2 tau) z, chain i drawing from stream i.
Ensemble langevin_sample(const ScoreFn& score, const Mat& x0, const LangevinConfig& config,
                         std::uint64_t seed, RecordOptions record = {},
                         NoiseAudit* audit = nullptr);

// n x d draws from Uniform[lo, hi]^d, row i from stream i of seed.
Mat uniform_start(std::size_t n, Eigen::Index d, double lo, double hi, std::uint64_t seed);

struct LossEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// 1/2 mean ||s(x) - reference(x)||^2.
LossEstimate esm_loss(const ScoreFn& model, const ScoreFn& reference, const Mat& x);
// mean [ tr(grad s(x)) + 1/2 ||s(x)||^2 ], the trace by central differences.
LossEstimate ism_loss(const ScoreFn& model, const Mat& x, double fd_step = 1e-4);
// 1/2 mean ||s(x + sigma z) + z / sigma||^2 with z from the bank.
LossEstimate dsm_loss(const ScoreFn& model, const Mat& x0, double sigma, StreamBank& bank);

// Noise-conditional model s(x, sigma) = net(x, log sigma) / sigma.
struct ScoreModel {
  Mlp net;
  SigmaLadder ladder;

  static ScoreModel random(Eigen::Index dim, std::vector<Eigen::Index> hidden,
                           SigmaLadder ladder, Rng& rng);
  Mat operator()(const Mat& x, double sigma) const;
  NoisyScoreFn fn() const;
};

struct NcsnLoss {
  LossEstimate total;  // (1/L) sum_i sigma_i^2 dsm_i
  std::vector<double> weighted;  // sigma_i^2 dsm_i, ladder order
};
NcsnLoss ncsn_loss(const NoisyScoreFn& model, const Mat& x0, const SigmaLadder& ladder,
                   std::uint64_t seed);

// Minibatch NCSN training, each row assigned a uniformly drawn level.
FitResult train_ncsn(ScoreModel& model, const Mat& data, std::size_t steps, std::size_t batch,
                     double learning_rate, Rng& rng, double final_lr_fraction = 0.05);
// Single-level DSM training of an unconditioned network.
FitResult train_dsm(Mlp& net, const Mat& data, double sigma, std::size_t steps,
                    std::size_t batch, double learning_rate, Rng& rng,
                    double final_lr_fraction = 0.05);

struct AnnealedConfig {
  std::size_t steps_per_level = 100;
  // alpha_i = step_fraction * sigma_i^2, i.e. the base step eps = step_fraction
  // * sigma_min^2 in alpha_i = eps sigma_i^2 / sigma_min^2.
  double step_fraction = 0.1;
};

// Levels visited largest sigma first; at level i,
// x <- x + (alpha_i / 2) s(x, sigma_i) + sqrt(alpha_i) z.
Ensemble annealed_langevin_sample(const NoisyScoreFn& score, const SigmaLadder& ladder,
                                  const Mat& x0, const AnnealedConfig& config,
                                  std::uint64_t seed, RecordOptions record = {});

}  // namespace difflab

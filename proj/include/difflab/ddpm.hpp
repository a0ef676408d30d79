#pragma once

#include <cstdint>
#include <functional>

#include "difflab/analytic.hpp"
#include "difflab/nn.hpp"
#include "difflab/rng.hpp"
#include "difflab/schedule.hpp"
#include "difflab/trajectory.hpp"

namespace difflab {

// Mean of q(x_{t-1} | x_t, x_0) is coef_xt * x_t + coef_x0 * x_0.
struct PosteriorParams {
  double coef_xt = 0.0;
  double coef_x0 = 0.0;
  double variance = 0.0;
};

// Valid for 1 <= t <= T; t = 1 collapses onto x_0 since alpha_bar_0 = 1.
PosteriorParams posterior_params(const NoiseSchedule& schedule, std::size_t t);

// x_t = sqrt(alpha_bar_t) x_0 + sqrt(1 - alpha_bar_t) eps for 0 <= t <= T.
Vec forward_sample(const Vec& x0, std::size_t t, const NoiseSchedule& schedule, Rng& rng);
// Row-wise, row i drawing from bank[i].
Mat forward_sample(const Mat& x0, std::size_t t, const NoiseSchedule& schedule,
                   StreamBank& bank);
// The same marginal reached through t single-step transitions.
Mat forward_chain(const Mat& x0, std::size_t t, const NoiseSchedule& schedule,
                  StreamBank& bank);
// Every step of the chained forward process, times 0..T.
Ensemble forward_trajectory(const Mat& x0, const NoiseSchedule& schedule,
                            std::uint64_t seed, RecordOptions record = {});

enum class Prediction { kX0, kEps };

// Batched network call: rows of x_t at a shared step t.
using Predictor = std::function<Mat(const Mat& x_t, std::size_t t)>;

struct DdpmModel {
  NoiseSchedule schedule;
  Prediction mode = Prediction::kEps;
  Predictor predictor;
};

// Conditions the network on t / T.
Predictor mlp_predictor(const Mlp& net, std::size_t steps);
// Exact E[x_0 | x_t] or E[eps | x_t] for data drawn from gmm.
Predictor mixture_oracle(const GaussianMixture& gmm, const NoiseSchedule& schedule,
                         Prediction mode);

enum class LossWeighting {
  kUnweighted,
  // The ELBO weight of the chosen parameterization.
  kElbo,
};

// ELBO weight of the squared prediction error. At t = 1 the posterior variance
// is zero, so beta_1 stands in for it.
double loss_weight(const NoiseSchedule& schedule, std::size_t t, Prediction mode);

double training_loss(const DdpmModel& model, const Vec& x0, std::size_t t, Rng& rng,
                     LossWeighting weighting = LossWeighting::kUnweighted);

struct DdpmTrainConfig {
  std::size_t steps = 10000;
  std::size_t batch = 128;
  double learning_rate = 2e-3;
  double final_lr_fraction = 0.05;
  Prediction mode = Prediction::kEps;
  LossWeighting weighting = LossWeighting::kUnweighted;
  std::size_t fixed_t = 0;  // 0 samples t uniformly from 1..T
};

FitResult train_ddpm(Mlp& net, const Mat& data, const NoiseSchedule& schedule,
                     const DdpmTrainConfig& config, Rng& rng);

// Reverse chain from x_T ~ N(0, I) down to x_0. Recorded times run T..0.
Ensemble ancestral_sample(const DdpmModel& model, std::size_t chains, Eigen::Index dim,
                          std::uint64_t seed, RecordOptions record = {});
// Same, starting from the supplied x_T.
Ensemble ancestral_sample(const DdpmModel& model, const Mat& x_T, std::uint64_t seed,
                          RecordOptions record = {});

}  // namespace difflab

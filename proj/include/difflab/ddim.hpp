#pragma once

#include <cstdint>
#include <vector>

#include "difflab/ddpm.hpp"

namespace difflab {

// DDIM writes alpha_t for the cumulative product, so here alpha_t means
// schedule.alpha_bar(t) and alpha_0 = 1.

// eta * sqrt((1 - alpha_prev) / (1 - alpha_t)) * sqrt(1 - alpha_t / alpha_prev).
// eta = 1 gives the DDPM posterior standard deviation, eta = 0 the
// deterministic sampler.
double ddim_sigma(double alpha_t, double alpha_prev, double eta);

// x_{t-1} = sqrt(alpha_prev) x0 + sqrt(1 - alpha_prev - sigma^2) (x_t - sqrt(alpha_t) x0)
//           / sqrt(1 - alpha_t) + sigma eps.
// Throws if sigma^2 > 1 - alpha_prev.
Vec ddim_transition_sample(const Vec& x_t, const Vec& x0, double alpha_t, double alpha_prev,
                           double sigma, Rng& rng);
Mat ddim_transition_sample(const Mat& x_t, const Mat& x0, double alpha_t, double alpha_prev,
                           double sigma, StreamBank& bank);

// Uniform-stride steps tau_i = round(i T / S), i = 0..S, ascending, tau_0 = 0.
std::vector<std::size_t> ddim_subsequence(std::size_t T, std::size_t S);

struct DdimConfig {
  std::size_t steps = 0;  // S; 0 uses every step of the schedule
  double eta = 0.0;
};

// One update t -> t_prev using the predicted x_0 = (x_t - sqrt(1 - alpha_t) eps) / sqrt(alpha_t).
Mat ddim_step(const DdpmModel& model, const Mat& x_t, std::size_t t, std::size_t t_prev,
              double eta, StreamBank& bank);

// Reverse pass over the configured subsequence. Recorded times are the
// visited steps, descending to 0.
Ensemble ddim_sample(const DdpmModel& model, const Mat& x_T, const DdimConfig& config,
                     std::uint64_t seed, RecordOptions record = {});
Ensemble ddim_sample(const DdpmModel& model, std::size_t chains, Eigen::Index dim,
                     const DdimConfig& config, std::uint64_t seed, RecordOptions record = {});

}  // namespace difflab

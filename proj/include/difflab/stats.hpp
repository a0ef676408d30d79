#pragma once

#include <functional>
#include <span>

namespace difflab {

using Cdf = std::function<double(double)>;

double normal_cdf(double x, double mean = 0.0, double stddev = 1.0);

// Two-sided Kolmogorov-Smirnov statistic sup_x |F_n(x) - F(x)|.
double ks_statistic(std::span<const double> samples, const Cdf& cdf);

// Two-sample statistic sup_x |F_a(x) - F_b(x)|.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

// W1 between two empirical distributions, integral of |F_a - F_b|.
// Handles unequal sizes exactly by merging the two step functions.
double wasserstein1_1d(std::span<const double> a, std::span<const double> b);

// W1 between samples and a continuous law, integral of |F_n - F| over
// [lo, hi]; the caller picks bounds outside which F is numerically 0 or 1.
double wasserstein1_to_cdf(std::span<const double> samples, const Cdf& cdf,
                           double lo, double hi);

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double std_error = 0.0;  // of the mean
  std::size_t n = 0;
};

Moments moments(std::span<const double> xs);

}  // namespace difflab

#include "difflab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "difflab/error.hpp"

namespace difflab {

double normal_cdf(double x, double mean, double stddev) {
  return 0.5 * std::erfc(-(x - mean) / (stddev * std::numbers::sqrt2));
}

double ks_statistic(std::span<const double> samples, const Cdf& cdf) {
  require(samples.size() >= 2, "ks_statistic: need at least two samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max({d, hi - f, f - lo});
  }
  return d;
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  require(!a.empty() && !b.empty(), "ks_two_sample: empty input");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double wasserstein1_1d(std::span<const double> a, std::span<const double> b) {
  require(!a.empty() && !b.empty(), "wasserstein1_1d: empty input");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());

  // Sweep the merged breakpoints; both CDFs are constant in between.
  std::size_t i = 0, j = 0;
  double prev = std::min(sa.front(), sb.front());
  double total = 0.0;
  while (i < sa.size() || j < sb.size()) {
    double next;
    if (j >= sb.size() || (i < sa.size() && sa[i] <= sb[j]))
      next = sa[i];
    else
      next = sb[j];
    const double fa = static_cast<double>(i) / na;
    const double fb = static_cast<double>(j) / nb;
    total += std::abs(fa - fb) * (next - prev);
    prev = next;
    while (i < sa.size() && sa[i] == next) ++i;
    while (j < sb.size() && sb[j] == next) ++j;
  }
  return total;
}

namespace {

// Integral of |c - F(x)| over [x0, x1] by composite Simpson.
double abs_gap_integral(const Cdf& cdf, double c, double x0, double x1,
                        double max_panel) {
  if (x1 <= x0) return 0.0;
  int panels = static_cast<int>(std::ceil((x1 - x0) / max_panel));
  panels = std::max(2, panels + panels % 2);
  const double h = (x1 - x0) / panels;
  double acc = 0.0;
  for (int k = 0; k <= panels; ++k) {
    const double w = (k == 0 || k == panels) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    acc += w * std::abs(c - cdf(x0 + k * h));
  }
  return acc * h / 3.0;
}

}  // namespace

double wasserstein1_to_cdf(std::span<const double> samples, const Cdf& cdf,
                           double lo, double hi) {
  require(!samples.empty(), "wasserstein1_to_cdf: empty input");
  require(lo < hi, "wasserstein1_to_cdf: need lo < hi");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double total = 0.0;
  const double max_panel = (hi - lo) / 4000.0;
  double prev = lo;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    const double next = i < s.size() ? std::clamp(s[i], lo, hi) : hi;
    total += abs_gap_integral(cdf, static_cast<double>(i) / n, prev, next,
                              max_panel);
    prev = std::max(prev, next);
  }
  // Samples outside [lo, hi] still contribute their distance to the window.
  for (double x : s) {
    if (x < lo) total += (lo - x) / n;
    if (x > hi) total += (x - hi) / n;
  }
  return total;
}

Moments moments(std::span<const double> xs) {
  require(xs.size() >= 2, "moments: need at least two values");
  Moments m;
  m.n = xs.size();
  double mean = 0.0, m2 = 0.0;
  std::size_t k = 0;
  for (double x : xs) {
    ++k;
    const double d = x - mean;
    mean += d / static_cast<double>(k);
    m2 += d * (x - mean);
  }
  m.mean = mean;
  m.variance = m2 / static_cast<double>(m.n - 1);
  m.std_error = std::sqrt(m.variance / static_cast<double>(m.n));
  return m;
}

}  // namespace difflab

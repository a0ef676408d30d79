#include "difflab/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "difflab/error.hpp"

namespace difflab {

Vec Grid1D::nodes() const {
  Vec xs(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) xs[static_cast<Eigen::Index>(i)] = x(i);
  return xs;
}

void Grid1D::validate() const {
  require(n >= 3, "Grid1D: need at least 3 nodes");
  require(x_max > x_min, "Grid1D: x_max must exceed x_min");
  require(dt > 0.0, "Grid1D: dt must be > 0");
}

FpCoefficients FpCoefficients::heat(double k) {
  require(k >= 0.0, "FpCoefficients::heat: k must be >= 0");
  return {[](double, double) { return 0.0; }, [k](double, double) { return k; }, true};
}

FpCoefficients FpCoefficients::ornstein_uhlenbeck(double gamma, double diffusion) {
  require(diffusion >= 0.0, "FpCoefficients::ornstein_uhlenbeck: diffusion must be >= 0");
  return {[gamma](double x, double) { return -gamma * x; },
          [diffusion](double, double) { return diffusion; }, true};
}

double mass(const Vec& p, double dx) { return p.sum() * dx; }

namespace {

struct Sampled {
  Vec d1_face;  // at x_{i+1/2}, size n - 1
  Vec d2_node;  // size n
};

Sampled sample_coefficients(const FpCoefficients& c, const Grid1D& g, double t) {
  Sampled s;
  const auto n = static_cast<Eigen::Index>(g.n);
  s.d1_face.resize(n - 1);
  s.d2_node.resize(n);
  const double dx = g.dx();
  for (Eigen::Index i = 0; i < n; ++i) {
    s.d2_node[i] = c.d2(g.x_min + static_cast<double>(i) * dx, t);
    if (i + 1 < n) s.d1_face[i] = c.d1(g.x_min + (static_cast<double>(i) + 0.5) * dx, t);
  }
  return s;
}

void check_stability(const Sampled& s, double h, double dx) {
  require(s.d2_node.minCoeff() >= 0.0, "fp_evolve: D2 must be >= 0");
  require(s.d2_node.maxCoeff() * h / (dx * dx) <= 0.5,
          "fp_evolve: explicit stability bound D2 dt / dx^2 <= 1/2 violated");
}

}  // namespace

DensityHistory fp_evolve(const FpCoefficients& coeffs, const Grid1D& grid, const Vec& p0,
                         double t0, double t_end, std::vector<double> snapshot_times) {
  grid.validate();
  require(static_cast<bool>(coeffs.d1) && static_cast<bool>(coeffs.d2),
          "fp_evolve: missing coefficient");
  require(p0.size() == static_cast<Eigen::Index>(grid.n), "fp_evolve: density size mismatch");
  require(t_end >= t0, "fp_evolve: t_end must be >= t0");
  std::sort(snapshot_times.begin(), snapshot_times.end());
  std::erase_if(snapshot_times, [&](double t) { return t <= t0 || t >= t_end; });
  snapshot_times.push_back(t_end);

  const double dx = grid.dx();
  const auto n = static_cast<Eigen::Index>(grid.n);
  DensityHistory hist;
  hist.grid = grid;
  hist.times.push_back(t0);
  hist.densities.push_back(p0);

  Sampled s = sample_coefficients(coeffs, grid, t0);
  check_stability(s, grid.dt, dx);

  Vec p = p0, flux(n - 1), dp(n);
  double t = t0;
  std::size_t step = 0;
  for (double target : snapshot_times) {
    const double span = target - t;
    const auto k = static_cast<std::size_t>(std::ceil(span / grid.dt - 1e-9));
    const double h = k > 0 ? span / static_cast<double>(k) : 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (!coeffs.autonomous) {
        s = sample_coefficients(coeffs, grid, t);
        check_stability(s, h, dx);
      }
      for (Eigen::Index i = 0; i + 1 < n; ++i)
        flux[i] = s.d1_face[i] * 0.5 * (p[i] + p[i + 1]) -
                  (s.d2_node[i + 1] * p[i + 1] - s.d2_node[i] * p[i]) / dx;
      dp[0] = -flux[0];
      for (Eigen::Index i = 1; i + 1 < n; ++i) dp[i] = flux[i - 1] - flux[i];
      dp[n - 1] = flux[n - 2];
      p += (h / dx) * dp;
      t += h;
      ++step;
      if (!p.allFinite() || p.minCoeff() < -1e-10) throw NumericError("fp_evolve", step);
    }
    t = target;
    hist.times.push_back(t);
    hist.densities.push_back(p);
  }
  return hist;
}

namespace {

Vec derivative(const Vec& f, double dx) {
  const Eigen::Index n = f.size();
  Vec d(n);
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx);
  d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dx);
  for (Eigen::Index i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * dx);
  return d;
}

}  // namespace

Vec probability_current(const FpCoefficients& coeffs, const Grid1D& grid, const Vec& p,
                        double t) {
  grid.validate();
  require(p.size() == static_cast<Eigen::Index>(grid.n), "probability_current: size mismatch");
  const auto n = static_cast<Eigen::Index>(grid.n);
  Vec d1p(n), d2p(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = grid.x(static_cast<std::size_t>(i));
    d1p[i] = coeffs.d1(x, t) * p[i];
    d2p[i] = coeffs.d2(x, t) * p[i];
  }
  return d1p - derivative(d2p, grid.dx());
}

Vec continuity_residual(const FpCoefficients& coeffs, const Grid1D& grid, const Vec& p_a,
                        double t_a, const Vec& p_b, double t_b) {
  require(t_b > t_a, "continuity_residual: need t_b > t_a");
  const Vec mid = 0.5 * (p_a + p_b);
  const Vec s = probability_current(coeffs, grid, mid, 0.5 * (t_a + t_b));
  return (p_b - p_a) / (t_b - t_a) + derivative(s, grid.dx());
}

double heat_kernel(double x, double t, double k, double x0) {
  require(t > 0.0 && k > 0.0, "heat_kernel: need t > 0 and k > 0");
  const double d = x - x0;
  return std::exp(-d * d / (4.0 * k * t)) / std::sqrt(4.0 * std::numbers::pi * k * t);
}

Vec gaussian_density(const Grid1D& grid, double mean, double variance) {
  require(variance > 0.0, "gaussian_density: variance must be > 0");
  Vec p(static_cast<Eigen::Index>(grid.n));
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double d = grid.x(i) - mean;
    p[static_cast<Eigen::Index>(i)] =
        std::exp(-0.5 * d * d / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
  }
  return p;
}

LinearLangevinLaw linear_langevin_solution(double gamma, double q, double xi0, double t) {
  require(gamma >= 0.0, "linear_langevin_solution: gamma must be >= 0");
  require(q > 0.0, "linear_langevin_solution: q must be > 0");
  require(t >= 0.0, "linear_langevin_solution: t must be >= 0");
  LinearLangevinLaw law;
  law.mean = xi0 * std::exp(-gamma * t);
  law.variance = gamma == 0.0 ? q * t : q / (2.0 * gamma) * -std::expm1(-2.0 * gamma * t);
  return law;
}

LangevinSde LangevinSde::ornstein_uhlenbeck(double gamma, double q) {
  return {[gamma](double x) { return -gamma * x; }, [](double) { return 1.0; }, q};
}

namespace {

double heun_step(const LangevinSde& sde, double x, double dt, double dw) {
  const double h0 = sde.h(x), g0 = sde.g(x);
  const double xp = x + h0 * dt + g0 * dw;
  return x + 0.5 * (h0 + sde.h(xp)) * dt + 0.5 * (g0 + sde.g(xp)) * dw;
}

}  // namespace

Ensemble simulate_langevin(const LangevinSde& sde, const Mat& x0, double dt, std::size_t steps,
                           std::uint64_t seed, RecordOptions record) {
  require(x0.cols() == 1, "simulate_langevin: scalar state expected");
  require(dt > 0.0 && sde.q > 0.0, "simulate_langevin: need dt > 0 and q > 0");
  StreamBank bank(seed, static_cast<std::size_t>(x0.rows()));
  EnsembleRecorder rec(record, seed, steps);
  const double sd = std::sqrt(sde.q * dt);
  Mat x = x0;
  rec.offer(0, 0.0, x);
  for (std::size_t k = 1; k <= steps; ++k) {
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      x(i, 0) = heun_step(sde, x(i, 0), dt, sd * bank[static_cast<std::size_t>(i)].normal());
    if (!all_finite(x)) throw NumericError("simulate_langevin", k);
    rec.offer(k, static_cast<double>(k) * dt, x);
  }
  return rec.take();
}

KmEstimate km_estimate(const LangevinSde& sde, double x, const std::vector<double>& dt_ladder,
                       std::size_t n_paths, std::uint64_t seed, std::size_t substeps) {
  require(!dt_ladder.empty(), "km_estimate: empty dt ladder");
  for (std::size_t k = 0; k < dt_ladder.size(); ++k) {
    require(dt_ladder[k] > 0.0, "km_estimate: dt must be > 0");
    require(k == 0 || dt_ladder[k] < dt_ladder[k - 1], "km_estimate: dt ladder must decrease");
  }
  require(n_paths >= 10000, "km_estimate: need at least 1e4 paths");
  require(substeps >= 1, "km_estimate: need at least one substep");

  KmEstimate out;
  out.dts = dt_ladder;
  std::vector<double> se1, se2;
  constexpr std::size_t kBlock = 8192;
  for (std::size_t k = 0; k < dt_ladder.size(); ++k) {
    const double dt = dt_ladder[k];
    const double h = dt / static_cast<double>(substeps);
    const double sd = std::sqrt(sde.q * h);
    double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    for (std::size_t start = 0; start < n_paths; start += kBlock) {
      const std::size_t m = std::min(kBlock, n_paths - start);
      StreamBank bank(seed, m, k * n_paths + start);
      for (std::size_t i = 0; i < m; ++i) {
        double y = x;
        for (std::size_t j = 0; j < substeps; ++j) y = heun_step(sde, y, h, sd * bank[i].normal());
        const double d = y - x, d2 = d * d;
        s1 += d;
        s2 += d2;
        s3 += d2 * d;
        s4 += d2 * d2;
      }
    }
    const double n = static_cast<double>(n_paths);
    const double m1 = s1 / n, m2 = s2 / n;
    const double v1 = (s2 / n - m1 * m1) * n / (n - 1.0);
    const double v2 = (s4 / n - m2 * m2) * n / (n - 1.0);
    out.d1_at.push_back(m1 / dt);
    out.d2_at.push_back(m2 / (2.0 * dt));
    se1.push_back(std::sqrt(v1 / n) / dt);
    se2.push_back(std::sqrt(v2 / n) / (2.0 * dt));
    if (!std::isfinite(out.d1_at.back()) || !std::isfinite(out.d2_at.back()))
      throw NumericError("km_estimate", k);
  }

  // Intercept of the least-squares line through (dt_k, y_k) is sum_k c_k y_k.
  const std::size_t L = dt_ladder.size();
  std::vector<double> c(L, 1.0);
  if (L >= 2) {
    double sx = 0, sxx = 0;
    for (double dt : dt_ladder) {
      sx += dt;
      sxx += dt * dt;
    }
    const double den = static_cast<double>(L) * sxx - sx * sx;
    for (std::size_t k = 0; k < L; ++k) c[k] = (sxx - dt_ladder[k] * sx) / den;
  }
  double var1 = 0, var2 = 0;
  for (std::size_t k = 0; k < L; ++k) {
    out.d1 += c[k] * out.d1_at[k];
    out.d2 += c[k] * out.d2_at[k];
    var1 += c[k] * c[k] * se1[k] * se1[k];
    var2 += c[k] * c[k] * se2[k] * se2[k];
  }
  out.d1_se = std::sqrt(var1);
  out.d2_se = std::sqrt(var2);
  return out;
}

}  // namespace difflab

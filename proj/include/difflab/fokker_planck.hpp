#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "difflab/rng.hpp"
#include "difflab/trajectory.hpp"

namespace difflab {

// n uniformly spaced nodes on [x_min, x_max] and an explicit time step.
struct Grid1D {
  double x_min = -10.0;
  double x_max = 10.0;
  std::size_t n = 2001;
  double dt = 1e-5;

  double dx() const { return (x_max - x_min) / static_cast<double>(n - 1); }
  double x(std::size_t i) const { return x_min + static_cast<double>(i) * dx(); }
  Vec nodes() const;
  void validate() const;
};

using FieldFn = std::function<double(double x, double t)>;

// dp/dt = -d/dx (D1 p) + d^2/dx^2 (D2 p).
struct FpCoefficients {
  FieldFn d1;
  FieldFn d2;
  // Set when neither coefficient depends on t, so they are evaluated once.
  bool autonomous = false;

  static FpCoefficients heat(double k);
  // D1 = -gamma x, D2 = diffusion.
  static FpCoefficients ornstein_uhlenbeck(double gamma, double diffusion);
};

struct DensityHistory {
  Grid1D grid;
  std::vector<double> times;
  std::vector<Vec> densities;
};

double mass(const Vec& p, double dx);

// Conservative explicit scheme with zero-flux walls: interface fluxes
// S_{i+1/2} = D1 (p_i + p_{i+1}) / 2 - ((D2 p)_{i+1} - (D2 p)_i) / dx.
// Snapshots are taken at each requested time in (t0, t_end] and at t_end.
// Throws std::invalid_argument if max D2 dt / dx^2 > 1/2 and NumericError if
// the density drops below -1e-10.
DensityHistory fp_evolve(const FpCoefficients& coeffs, const Grid1D& grid, const Vec& p0,
                         double t0, double t_end, std::vector<double> snapshot_times = {});

// S = D1 p - d/dx (D2 p) at the nodes, central differences inside and
// one-sided at the walls.
Vec probability_current(const FpCoefficients& coeffs, const Grid1D& grid, const Vec& p,
                        double t);
// dp/dt + dS/dx between two snapshots, with S taken at their average.
Vec continuity_residual(const FpCoefficients& coeffs, const Grid1D& grid, const Vec& p_a,
                        double t_a, const Vec& p_b, double t_b);

double heat_kernel(double x, double t, double k, double x0 = 0.0);
Vec gaussian_density(const Grid1D& grid, double mean, double variance);

// xi' = -gamma xi + Gamma(t) with E[Gamma(t) Gamma(t')] = q delta(t - t').
struct LinearLangevinLaw {
  double mean = 0.0;
  double variance = 0.0;
};
LinearLangevinLaw linear_langevin_solution(double gamma, double q, double xi0, double t);

// x' = h(x) + g(x) Gamma(t) with E[Gamma(t) Gamma(t')] = q delta(t - t'), read
// in the Stratonovich sense. Its Kramers-Moyal coefficients are
// D1 = h + (q / 2) g g' and D2 = (q / 2) g^2.
struct LangevinSde {
  std::function<double(double)> h;
  std::function<double(double)> g;
  double q = 2.0;

  static LangevinSde ornstein_uhlenbeck(double gamma, double q);
};

// Stochastic Heun (midpoint) steps, which converge to the Stratonovich
// solution. Chain i draws from stream i. Recorded times are k * dt.
Ensemble simulate_langevin(const LangevinSde& sde, const Mat& x0, double dt, std::size_t steps,
                           std::uint64_t seed, RecordOptions record = {});

struct KmEstimate {
  double d1 = 0.0;
  double d2 = 0.0;
  double d1_se = 0.0;
  double d2_se = 0.0;
  std::vector<double> dts;
  std::vector<double> d1_at;  // E[dx] / dt at each ladder step
  std::vector<double> d2_at;  // E[dx^2] / (2 dt)
};

// Conditional increment moments from x over each dt of the ladder (each
// simulated with `substeps` Heun steps), extrapolated to dt -> 0 by a linear
// least-squares fit; the intercepts are reported.
KmEstimate km_estimate(const LangevinSde& sde, double x, const std::vector<double>& dt_ladder,
                       std::size_t n_paths, std::uint64_t seed, std::size_t substeps = 20);

}  // namespace difflab

// Acceptance run: one PASS/FAIL line per criterion, exit status = number of
// failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "difflab/analytic.hpp"
#include "difflab/ddim.hpp"
#include "difflab/ddpm.hpp"
#include "difflab/fokker_planck.hpp"
#include "difflab/nn.hpp"
#include "difflab/score.hpp"
#include "difflab/sde.hpp"
#include "difflab/stats.hpp"
#include "difflab/vae.hpp"

namespace difflab {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

std::vector<double> column(const Mat& x) {
  return std::vector<double>(x.col(0).data(), x.col(0).data() + x.rows());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

GaussianMixture twin_modes() { return GaussianMixture::from_1d({0.5, 0.5}, {-3.0, 3.0}, {1.0, 1.0}); }

double right_mass(const Mat& x) { return (x.col(0).array() > 0.0).cast<double>().mean(); }

Outcome forward_marginal() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto g = GaussianMixture::from_1d({0.3, 0.7}, {-2.0, 2.0}, {0.2, 1.0});
  const auto s = NoiseSchedule::constant(50, 0.03);
  Rng rng(1);
  const Mat x0 = g.sample(100000, rng);
  StreamBank bank(2, 100000);
  const Mat x50 = forward_sample(x0, 50, s, bank);
  const auto target = diffused_mixture(g, s.alpha_bar(50));
  const double ks = ks_statistic(column(x50), [&](double x) { return target.cdf(x); });
  const double secs = seconds_since(t0);
  return {ks < 0.02 && secs < 10.0, fmt("KS %.4f (< 0.02), %.2f s (< 10 s)", ks, secs)};
}

Outcome langevin_equilibrium() {
  const auto g = GaussianMixture::from_1d({0.6, 0.4}, {2.0, -2.0}, {0.5, 0.2});
  const Mat x0 = uniform_start(10000, 1, -3.0, 3.0, 3);
  const auto e = langevin_sample(mixture_score_fn(g), x0, {0.05, 100, true}, 4);
  const double ks = ks_statistic(column(e.final()), [&](double x) { return g.cdf(x); });
  return {ks < 0.03, fmt("KS %.4f (< 0.03)", ks)};
}

Outcome oracle_reverse_sampler() {
  const auto g = twin_modes();
  const auto s = NoiseSchedule::linear(1000, 1e-4, 0.02);
  const DdpmModel m{s, Prediction::kEps, mixture_oracle(g, s, Prediction::kEps)};
  const auto e = ancestral_sample(m, 10000, 1, 5);
  const double w1 =
      wasserstein1_to_cdf(column(e.final()), [&](double x) { return g.cdf(x); }, -10.0, 10.0);
  const double right = right_mass(e.final());
  return {w1 < 0.1 && std::abs(right - 0.5) <= 0.03 && std::abs((1 - right) - 0.5) <= 0.03,
          fmt("W1 %.4f (< 0.1), mode masses %.4f / %.4f (0.5 +- 0.03)", w1, 1 - right, right)};
}

Outcome ddim_marginal_preservation() {
  const auto s = NoiseSchedule::linear(1000, 1e-4, 0.02);
  Rng cfg_rng(6);
  const std::size_t n = 100000;
  int failures = 0;
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const auto t = static_cast<std::size_t>(cfg_rng.uniform_int(2, 1000));
    const double at = s.alpha_bar(t), ap = s.alpha_bar(t - 1);
    const double sigma = ddim_sigma(at, ap, cfg_rng.uniform(0.0, 1.0));
    const Vec x0 = Vec::Constant(1, cfg_rng.uniform(-3.0, 3.0));
    const Mat X0 = x0.transpose().replicate(static_cast<Eigen::Index>(n), 1);
    StreamBank fwd(100 + k, n), rev(200 + k, n);
    const Mat xt = forward_sample(X0, t, s, fwd);
    const auto m = moments(column(ddim_transition_sample(xt, X0, at, ap, sigma, rev)));
    const double mean_z = (m.mean - std::sqrt(ap) * x0[0]) / m.std_error;
    const double var_se = m.variance * std::sqrt(2.0 / static_cast<double>(n - 1));
    const double var_z = (m.variance - (1.0 - ap)) / var_se;
    worst = std::max({worst, std::abs(mean_z), std::abs(var_z)});
    failures += (std::abs(mean_z) > 3.0) + (std::abs(var_z) > 3.0);
  }
  return {failures == 0, fmt("worst deviation %.2f SE over 10 configs (< 3 SE)", worst)};
}

Outcome vincent_equivalence() {
  const auto g = GaussianMixture::from_1d({0.6, 0.4}, {2.0, -2.0}, {0.5, 0.2});
  const double sigma = 0.5;
  const auto noisy = convolved_mixture(g, sigma);
  Rng rng(7);
  std::vector<double> gaps, ses;
  for (int k = 0; k < 10; ++k) {
    const auto model = mlp_score_fn(Mlp::random({1, {8}, 1, false}, rng));
    Rng data(300 + k), noisy_data(400 + k);
    StreamBank bank(200 + k, 50000);
    const auto dsm = dsm_loss(model, g.sample(50000, data), sigma, bank);
    const auto esm = esm_loss(model, mixture_score_fn(noisy), noisy.sample(50000, noisy_data));
    gaps.push_back(dsm.mean - esm.mean);
    ses.push_back(std::hypot(dsm.std_error, esm.std_error));
  }
  double mean = 0.0, se2 = 0.0;
  for (std::size_t k = 0; k < gaps.size(); ++k) {
    mean += gaps[k] / 10.0;
    se2 += ses[k] * ses[k] / 10.0;
  }
  double var = 0.0;
  for (double d : gaps) var += (d - mean) * (d - mean) / 9.0;
  const double spread = std::sqrt(var), rms_se = std::sqrt(se2);
  return {spread < 3.0 * rms_se,
          fmt("spread of J_DSM - J_ESM %.2e vs 3 SE %.2e (gap %.4f)", spread, 3.0 * rms_se, mean)};
}

Outcome gradient_integrity() {
  Rng rng(8);
  double worst_mlp = 0.0, worst_vae = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    MlpShape shape;
    shape.data_dim = rng.uniform_int(1, 2);
    shape.output_dim = rng.uniform_int(1, 2);
    shape.conditioned = rng.uniform() < 0.7;
    for (auto l = rng.uniform_int(1, 3); l > 0; --l) shape.hidden.push_back(rng.uniform_int(1, 32));
    const Mlp net = Mlp::random(shape, rng);
    const Vec x = rng.normal_vec(shape.data_dim), target = rng.normal_vec(shape.output_dim);
    const OutputLoss loss = [&](const Vec& y, Vec& g) {
      g = y - target;
      return 0.5 * g.squaredNorm();
    };
    const double cond = rng.uniform();
    const Vec analytic = mlp_gradient(net, loss, x, cond).grad;
    worst_mlp = std::max(worst_mlp, gradient_relative_error(
                                        analytic, finite_difference_gradient(net, loss, x, cond, 1e-6)));

    const Eigen::Index d = rng.uniform_int(1, 3);
    AffineVae vae;
    vae.a = rng.uniform(0.3, 2.0);
    vae.b = rng.normal_vec(d);
    vae.t = rng.uniform(0.3, 2.0);
    vae.c = rng.uniform(0.3, 2.0);
    vae.v = rng.normal_vec(d);
    vae.s = rng.uniform(0.3, 2.0);
    const Vec xv = rng.normal_vec(d);
    Mat eps(8, d);
    for (Eigen::Index i = 0; i < 8; ++i) eps.row(i) = rng.normal_vec(d).transpose();
    const Vec p = vae.pack(), gv = elbo_gradient(vae, xv, eps);
    Vec fd(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      Vec hi = p, lo = p;
      hi[i] += 1e-6;
      lo[i] -= 1e-6;
      fd[i] = (elbo(AffineVae::unpack(hi, d), xv, eps).total() -
               elbo(AffineVae::unpack(lo, d), xv, eps).total()) / 2e-6;
    }
    worst_vae = std::max(worst_vae, gradient_relative_error(gv, fd));
  }
  return {worst_mlp < 1e-5 && worst_vae < 1e-5,
          fmt("worst relative error MLP %.2e, affine VAE %.2e (< 1e-5, 100 trials)", worst_mlp, worst_vae)};
}

Outcome affine_vae_optimum() {
  const IsotropicGaussian law{Vec::Constant(1, 2.0), 0.5};
  Rng rng(9);
  const Mat data = law.sample(10000, rng);
  const auto v = train_affine_vae(data, AffineVae::identity(1), {}, rng).vae;
  const double ec = std::abs(v.c / 0.5 - 1), ev = std::abs(v.v[0] / 2.0 - 1),
               es = std::abs(v.s / 0.5 - 1), et = std::abs(v.t - 1);
  return {std::max({ec, ev, es, et}) < 0.05,
          fmt("(c, v, s, t) = (%.4f, %.4f, %.4f, %.4f) vs (0.5, 2, 0.5, 1), within 5%%", v.c, v.v[0], v.s, v.t)};
}

Outcome heat_kernel_check() {
  const double dx = 0.01;
  const Grid1D g{-12.0, 12.0, 2401, 0.4 * dx * dx};
  Vec p0(2401);
  for (std::size_t i = 0; i < g.n; ++i) p0[static_cast<Eigen::Index>(i)] = heat_kernel(g.x(i), 0.01, 1.0);
  const auto h = fp_evolve(FpCoefficients::heat(1.0), g, p0, 0.01, 1.0, {0.25, 0.5, 0.75});
  double linf = 0.0, drift = 0.0;
  for (std::size_t i = 0; i < g.n; ++i)
    linf = std::max(linf, std::abs(h.densities.back()[static_cast<Eigen::Index>(i)] - heat_kernel(g.x(i), 1.0, 1.0)));
  for (const Vec& p : h.densities) drift = std::max(drift, std::abs(mass(p, dx) - mass(p0, dx)));
  return {linf < 1e-3 && drift < 1e-4, fmt("L-inf %.2e (< 1e-3), mass drift %.2e (< 1e-4)", linf, drift)};
}

Outcome km_coefficients() {
  const double gamma = 1.0, q = 2.0;
  const auto sde = LangevinSde::ornstein_uhlenbeck(gamma, q);
  bool ok = true;
  std::string detail;
  for (double x : {-1.0, 0.0, 1.0}) {
    const auto k = km_estimate(sde, x, {0.2, 0.1, 0.05}, 1000000, 10, 20);
    const double d1 = -gamma * x, d2 = q / 2;
    // 5% of the coefficient; where D1 vanishes, 5% of the D1 scale gamma.
    const double tol1 = 0.05 * std::max(std::abs(d1), gamma);
    ok = ok && std::abs(k.d1 - d1) < tol1 && std::abs(k.d2 - d2) < 0.05 * d2;
    detail += fmt("x=%g: D1 %.4f (%.4f), D2 %.4f (%.4f); ", x, k.d1, d1 + 0.0, k.d2, d2);
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

Outcome solver_orders() {
  const auto decay = [](std::size_t steps) {
    return OdeProblem{[](double, const Vec& x) -> Vec { return -0.5 * x; }, Vec::Ones(1), 0.0, 1.0, steps};
  };
  const auto err = [](const Trajectory& tr) {
    return std::abs(tr.states(tr.states.rows() - 1, 0) - std::exp(-0.5));
  };
  const double euler = err(euler_solve(decay(10))) / err(euler_solve(decay(20)));
  const double rk4 = err(rk4_solve(decay(10))) / err(rk4_solve(decay(20)));
  return {std::abs(euler - 2.0) < 0.1 && rk4 >= 12.0 && rk4 <= 20.0,
          fmt("Euler ratio %.4f (~2), RK4 ratio %.3f (in [12, 20])", euler, rk4)};
}

Outcome pc_reduction() {
  const auto g = twin_modes();
  const auto p = SdeParams::vp(std::vector<double>(200, 0.05));
  const auto score = vp_mixture_score(g, p);
  StreamBank start(11, 5000);
  const Mat xN = start.normal(1);
  const auto a = sde_reverse(p, score, xN, 12, {10});
  const auto b = predictor_corrector(p, score, xN, {0, 0.1}, 12, {10});
  bool same = a.times == b.times && a.frames.size() == b.frames.size();
  for (std::size_t k = 0; same && k < a.frames.size(); ++k) same = a.frames[k] == b.frames[k];
  return {same, same ? "M=0 trajectories bit-identical" : "M=0 trajectories differ"};
}

Outcome trained_end_to_end() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto g = twin_modes();
  const auto s = NoiseSchedule::linear(1000, 1e-4, 0.02);
  Rng rng(13);
  const Mat data = g.sample(20000, rng);
  Mlp net = Mlp::random({1, {64, 64}, 1, true}, rng);
  DdpmTrainConfig cfg;
  cfg.steps = 10000;
  cfg.batch = 512;
  train_ddpm(net, data, s, cfg, rng);
  const DdpmModel m{s, Prediction::kEps, mlp_predictor(net, s.steps())};
  const auto e = ancestral_sample(m, 10000, 1, 14);
  const double w1 =
      wasserstein1_to_cdf(column(e.final()), [&](double x) { return g.cdf(x); }, -10.0, 10.0);
  const double secs = seconds_since(t0);
  return {w1 < 0.25 && secs < 300.0, fmt("W1 %.4f (< 0.25), %.1f s (< 300 s)", w1, secs)};
}

}  // namespace
}  // namespace difflab

int main() {
  using namespace difflab;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"forward-marginal", forward_marginal},
      {"langevin-equilibrium", langevin_equilibrium},
      {"oracle-reverse-sampler", oracle_reverse_sampler},
      {"ddim-marginal-preservation", ddim_marginal_preservation},
      {"vincent-equivalence", vincent_equivalence},
      {"gradient-integrity", gradient_integrity},
      {"affine-vae-optimum", affine_vae_optimum},
      {"heat-kernel-pde", heat_kernel_check},
      {"km-coefficients", km_coefficients},
      {"solver-orders", solver_orders},
      {"predictor-corrector-reduction", pc_reduction},
      {"trained-end-to-end", trained_end_to_end},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures;
}

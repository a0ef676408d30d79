#include "difflab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>

#include "difflab/analytic.hpp"
#include "difflab/csv.hpp"
#include "difflab/ddim.hpp"
#include "difflab/ddpm.hpp"
#include "difflab/error.hpp"
#include "difflab/fokker_planck.hpp"
#include "difflab/nn.hpp"
#include "difflab/score.hpp"
#include "difflab/sde.hpp"
#include "difflab/stats.hpp"
#include "difflab/vae.hpp"

namespace difflab {
namespace {

// Stream ids far above any chain index, so data draws never share a stream
// with a sampler.
constexpr std::uint64_t kDataStream = std::uint64_t{1} << 40;
constexpr std::uint64_t kTrainStream = std::uint64_t{1} << 41;

std::vector<double> column(const Mat& x, Eigen::Index j = 0) {
  return std::vector<double>(x.col(j).data(), x.col(j).data() + x.rows());
}

std::vector<ParamSpec> mixture_params(const std::string& w, const std::string& m,
                                      const std::string& s) {
  return {{"weights", w, "mixture weights"},
          {"means", m, "component means"},
          {"stddevs", s, "component standard deviations"}};
}

GaussianMixture mixture_from(const Params& p) {
  return GaussianMixture::from_1d(p.reals("weights"), p.reals("means"), p.reals("stddevs"));
}

std::vector<ParamSpec> operator+(std::vector<ParamSpec> a, const std::vector<ParamSpec>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

NoiseSchedule schedule_from(const Params& p) {
  return NoiseSchedule::linear(p.count("steps"), p.real("beta-min"), p.real("beta-max"));
}

Prediction prediction_from(const Params& p) {
  const auto& m = p.text("mode");
  if (m == "eps") return Prediction::kEps;
  if (m == "x0") return Prediction::kX0;
  throw std::invalid_argument("key 'mode': expected eps or x0, got '" + m + "'");
}

std::vector<double> grid(double lo, double hi, std::size_t n) {
  require(n >= 2 && hi > lo, "grid needs at least two points on a non-empty interval");
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i)
    xs[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return xs;
}

void write_density(const std::filesystem::path& path, const GaussianMixture& g,
                   const std::vector<double>& xs) {
  CsvWriter w(path, {"x", "p"});
  for (double x : xs) w.row({x, std::exp(mixture_log_pdf(g, Vec(Vec::Constant(1, x))))});
}

void write_summary(const std::filesystem::path& path,
                   const std::vector<std::pair<std::string, double>>& metrics) {
  std::vector<std::string> header;
  std::vector<double> values;
  for (const auto& [k, v] : metrics) {
    header.push_back(k);
    values.push_back(v);
  }
  CsvWriter w(path, header);
  w.row(values);
}

double right_mass(const Mat& x) { return (x.col(0).array() > 0.0).cast<double>().mean(); }

RecordOptions record_from(const Params& p) { return {p.count("stride")}; }

Eigen::Index record_chains(const Params& p) {
  return static_cast<Eigen::Index>(p.count("record-chains"));
}

std::vector<ParamSpec> recording(const std::string& stride, const std::string& chains) {
  return {{"stride", stride, "keep every k-th step of the trajectory (0 = endpoints only)"},
          {"record-chains", chains, "chains written to trajectory.csv"}};
}

void sample_report(RunDir& dir, const Params& p, const Ensemble& e, const GaussianMixture& target) {
  write_ensemble_csv(dir.file("trajectory.csv"), e, record_chains(p));
  write_samples_csv(dir.file("samples.csv"), e.final());
  const auto xs = column(e.final());
  const Cdf cdf = [&](double x) { return target.cdf(x); };
  write_summary(dir.file("summary.csv"),
                {{"ks", ks_statistic(xs, cdf)},
                 {"w1", wasserstein1_to_cdf(xs, cdf, -30.0, 30.0)},
                 {"right_mass", right_mass(e.final())}});
}

// forward-gmm

void run_forward_gmm(const Params& p, RunDir& dir) {
  const auto g = mixture_from(p);
  const auto s = NoiseSchedule::constant(p.count("steps"), 1.0 - p.real("alpha"));
  const std::size_t T = s.steps();
  write_schedule_csv(dir.file("schedule.csv"), s);

  Rng rng(p.seed(), kDataStream);
  const auto n = p.count("samples");
  const Mat x0 = g.sample(n, rng);
  StreamBank bank(p.seed(), n);
  const Mat xT = forward_sample(x0, T, s, bank);
  write_samples_csv(dir.file("samples.csv"), xT);

  const auto e = forward_trajectory(x0.topRows(std::min<Eigen::Index>(record_chains(p), x0.rows())), s,
                                    p.seed(), record_from(p));
  write_ensemble_csv(dir.file("trajectory.csv"), e);

  CsvWriter w(dir.file("density.csv"), {"t", "x", "p"});
  const auto xs = grid(p.real("x-min"), p.real("x-max"), p.count("x-points"));
  for (double t : e.times) {
    const auto gt = diffused_mixture(g, s.alpha_bar(static_cast<std::size_t>(t)));
    for (double x : xs) w.row({t, x, std::exp(mixture_log_pdf(gt, Vec(Vec::Constant(1, x))))});
  }
  const auto gT = diffused_mixture(g, s.alpha_bar(T));
  write_summary(dir.file("summary.csv"),
                {{"alpha_bar", s.alpha_bar(T)},
                 {"ks", ks_statistic(column(xT), [&](double x) { return gT.cdf(x); })}});
}

// langevin

void run_langevin(const Params& p, RunDir& dir) {
  const auto g = mixture_from(p);
  const Mat x0 = uniform_start(p.count("chains"), 1, p.real("start-lo"), p.real("start-hi"), p.seed());
  const LangevinConfig cfg{p.real("tau"), p.count("langevin-steps"), p.flag("noise")};
  const auto e = langevin_sample(mixture_score_fn(g), x0, cfg, p.seed(), record_from(p));
  sample_report(dir, p, e, g);
  write_density(dir.file("density.csv"), g, grid(-6, 6, 601));
}

// DDPM

std::vector<ParamSpec> schedule_params() {
  return {{"steps", "1000", "diffusion steps T"},
          {"beta-min", "1e-4", "beta_1 of the linear schedule"},
          {"beta-max", "0.02", "beta_T of the linear schedule"},
          {"mode", "eps", "network prediction target: eps or x0"}};
}

std::vector<std::size_t> hidden_from(const Params& p) { return p.counts("hidden"); }

void run_ddpm_train(const Params& p, RunDir& dir) {
  const auto g = mixture_from(p);
  const auto s = schedule_from(p);
  Rng data_rng(p.seed(), kDataStream);
  const Mat data = g.sample(p.count("data"), data_rng);
  Rng rng(p.seed(), kTrainStream);
  std::vector<Eigen::Index> hidden;
  for (auto h : hidden_from(p)) hidden.push_back(static_cast<Eigen::Index>(h));
  Mlp net = Mlp::random({1, hidden, 1, true}, rng);

  DdpmTrainConfig cfg;
  cfg.steps = p.count("train-steps");
  cfg.batch = p.count("batch");
  cfg.learning_rate = p.real("lr");
  cfg.final_lr_fraction = p.real("final-lr-fraction");
  cfg.mode = prediction_from(p);
  const auto& weighting = p.text("weighting");
  require(weighting == "unweighted" || weighting == "elbo",
          "key 'weighting': expected unweighted or elbo, got '" + weighting + "'");
  cfg.weighting = weighting == "elbo" ? LossWeighting::kElbo : LossWeighting::kUnweighted;
  const auto fit = train_ddpm(net, data, s, cfg, rng);

  save_mlp_csv(dir.file("weights.csv"), net);
  write_schedule_csv(dir.file("schedule.csv"), s);
  CsvWriter w(dir.file("loss.csv"), {"step", "loss", "smoothed"});
  const auto smooth = moving_average(fit.losses, 100);
  for (std::size_t k = 0; k < fit.losses.size(); ++k)
    w.row({static_cast<double>(k + 1), fit.losses[k], smooth[k]});
}

DdpmModel ddpm_model_from(const Params& p, const GaussianMixture& g) {
  const auto s = schedule_from(p);
  const auto mode = prediction_from(p);
  const auto& weights = p.text("weights-file");
  if (weights.empty()) return {s, mode, mixture_oracle(g, s, mode)};
  const Mlp net = load_mlp_csv(weights, true);
  require(net.shape().data_dim == 1 && net.shape().output_dim == 1,
          "weights-file must hold a 1D conditioned network");
  return {s, mode, mlp_predictor(net, s.steps())};
}

void run_ddpm_sample(const Params& p, RunDir& dir) {
  const auto g = mixture_from(p);
  const auto model = ddpm_model_from(p, g);
  const auto e = ancestral_sample(model, p.count("chains"), 1, p.seed(), record_from(p));
  sample_report(dir, p, e, g);
}

void run_ddim_sample(const Params& p, RunDir& dir) {
  const auto g = mixture_from(p);
  const auto model = ddpm_model_from(p, g);
  const DdimConfig cfg{p.count("ddim-steps"), p.real("eta")};
  const auto e = ddim_sample(model, p.count("chains"), 1, cfg, p.seed(), record_from(p));
  sample_report(dir, p, e, g);
}

// VAE

void run_vae_affine(const Params& p, RunDir& dir) {
  const auto d = static_cast<Eigen::Index>(p.count("dim"));
  require(d >= 1, "key 'dim' must be at least 1");
  const IsotropicGaussian law{Vec::Constant(d, p.real("mean")), p.real("stddev")};
  Rng data_rng(p.seed(), kDataStream);
  const Mat data = law.sample(p.count("data"), data_rng);

  VaeTrainConfig cfg;
  cfg.steps = p.count("train-steps");
  cfg.batch = p.count("batch");
  cfg.mc_samples = p.count("mc-samples");
  cfg.learning_rate = p.real("lr");
  cfg.final_lr_fraction = p.real("final-lr-fraction");
  const auto& obj = p.text("objective");
  require(obj == "termwise" || obj == "joint",
          "key 'objective': expected termwise or joint, got '" + obj + "'");
  cfg.objective = obj == "joint" ? VaeObjective::kJointElbo : VaeObjective::kTermwise;
  Rng rng(p.seed(), kTrainStream);
  const auto result = train_affine_vae(data, AffineVae::identity(d), cfg, rng);

  std::vector<std::string> header{"optimum", "a", "t", "c", "s"};
  for (Eigen::Index i = 0; i < d; ++i) header.push_back("b" + std::to_string(i));
  for (Eigen::Index i = 0; i < d; ++i) header.push_back("v" + std::to_string(i));
  CsvWriter w(dir.file("parameters.csv"), header);
  const auto emit = [&](double flag, const AffineVae& v) {
    std::vector<double> row{flag, v.a, v.t, v.c, v.s};
    for (Eigen::Index i = 0; i < d; ++i) row.push_back(v.b[i]);
    for (Eigen::Index i = 0; i < d; ++i) row.push_back(v.v[i]);
    w.row(row);
  };
  emit(0.0, result.vae);
  emit(1.0, standardizing_optimum(law));

  CsvWriter e(dir.file("elbo.csv"), {"step", "elbo", "smoothed"});
  const auto smooth = moving_average(result.mean_elbo, 100);
  for (std::size_t k = 0; k < result.mean_elbo.size(); ++k)
    e.row({static_cast<double>(k + 1), result.mean_elbo[k], smooth[k]});
}

// NCSN

void run_ncsn(const Params& p, RunDir& dir) {
  const auto g = mixture_from(p);
  const auto ladder = SigmaLadder::geometric(p.real("sigma-min"), p.real("sigma-max"), p.count("levels"));
  NoisyScoreFn score;
  std::optional<ScoreModel> model;
  const auto& which = p.text("score");
  if (which == "trained") {
    Rng data_rng(p.seed(), kDataStream);
    const Mat data = g.sample(p.count("data"), data_rng);
    Rng rng(p.seed(), kTrainStream);
    std::vector<Eigen::Index> hidden;
    for (auto h : p.counts("hidden")) hidden.push_back(static_cast<Eigen::Index>(h));
    model = ScoreModel::random(1, hidden, ladder, rng);
    const auto fit = train_ncsn(*model, data, p.count("train-steps"), p.count("batch"), p.real("lr"), rng);
    CsvWriter w(dir.file("loss.csv"), {"step", "loss", "smoothed"});
    const auto smooth = moving_average(fit.losses, 100);
    for (std::size_t k = 0; k < fit.losses.size(); ++k)
      w.row({static_cast<double>(k + 1), fit.losses[k], smooth[k]});
    score = model->fn();
  } else {
    require(which == "oracle", "key 'score': expected trained or oracle, got '" + which + "'");
    score = convolved_score_fn(g);
  }

  Rng eval_rng(p.seed(), kDataStream + 1);
  const Mat eval = g.sample(10000, eval_rng);
  const auto losses = ncsn_loss(score, eval, ladder, p.seed());
  const auto oracle = convolved_score_fn(g);
  CsvWriter lv(dir.file("levels.csv"), {"sigma", "weighted_dsm", "esm"});
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    const double sigma = ladder[i];
    const auto esm = esm_loss([&](const Mat& x) { return score(x, sigma); },
                              [&](const Mat& x) { return oracle(x, sigma); },
                              convolved_mixture(g, sigma).sample(2000, eval_rng));
    lv.row({sigma, losses.weighted[i], esm.mean});
  }

  const Mat x0 = uniform_start(p.count("chains"), 1, p.real("start-lo"), p.real("start-hi"), p.seed());
  const AnnealedConfig cfg{p.count("steps-per-level"), p.real("step-fraction")};
  const auto e = annealed_langevin_sample(score, ladder, x0, cfg, p.seed(), record_from(p));
  sample_report(dir, p, e, g);
}

// SDE

SdeParams sde_from(const Params& p) {
  const auto& kind = p.text("kind");
  const auto n = p.count("levels");
  require(n >= 1, "key 'levels' must be at least 1");
  if (kind == "vp") return SdeParams::vp(std::vector<double>(n, p.real("beta")));
  require(kind == "ve", "key 'kind': expected vp or ve, got '" + kind + "'");
  const double lo = p.real("sigma-min"), hi = p.real("sigma-max");
  require(lo > 0 && hi >= lo, "need 0 < sigma-min <= sigma-max");
  std::vector<double> sigmas(n + 1);
  for (std::size_t i = 0; i <= n; ++i)
    sigmas[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n));
  return SdeParams::ve(sigmas);
}

std::vector<ParamSpec> sde_params() {
  return {{"kind", "vp", "vp or ve"},
          {"levels", "200", "discretization levels N"},
          {"beta", "0.05", "constant VP beta_i"},
          {"sigma-min", "0.01", "VE sigma_0"},
          {"sigma-max", "10", "VE sigma_N, geometric ladder"},
          {"chains", "10000", "number of chains"}};
}

void run_sde_forward(const Params& p, RunDir& dir) {
  const auto g = mixture_from(p);
  const auto sde = sde_from(p);
  Rng rng(p.seed(), kDataStream);
  const Mat x0 = g.sample(p.count("chains"), rng);
  const auto e = sde_forward(sde, x0, p.seed(), record_from(p));
  const auto N = sde.steps();
  const auto terminal = sde.kind == SdeKind::kVP
                            ? diffused_mixture(g, sde.alpha_bar(N))
                            : convolved_mixture(g, std::sqrt(sde.sigmas[N] * sde.sigmas[N] -
                                                             sde.sigmas[0] * sde.sigmas[0]));
  write_ensemble_csv(dir.file("trajectory.csv"), e, record_chains(p));
  write_samples_csv(dir.file("samples.csv"), e.final());
  const auto xs = column(e.final());
  const double prior_sd = sde.kind == SdeKind::kVP ? 1.0 : sde.sigmas[N];
  write_summary(dir.file("summary.csv"),
                {{"ks_exact", ks_statistic(xs, [&](double x) { return terminal.cdf(x); })},
                 {"ks_prior", ks_statistic(xs, [&](double x) { return normal_cdf(x, 0.0, prior_sd); })},
                 {"variance", moments(xs).variance}});
}

Ensemble reverse_run(const Params& p, const GaussianMixture& g, const PcConfig& pc) {
  const auto sde = sde_from(p);
  const auto n = p.count("chains");
  StreamBank start(p.seed(), n, n);
  Mat xN = start.normal(1);
  LevelScore score;
  if (sde.kind == SdeKind::kVP) {
    score = vp_mixture_score(g, sde);
  } else {
    xN *= sde.sigmas.back();
    score = ve_mixture_score(g, sde);
  }
  if (pc.corrector_steps == 0) return sde_reverse(sde, score, xN, p.seed(), record_from(p));
  require(sde.kind == SdeKind::kVP, "corrector steps need kind = vp");
  return predictor_corrector(sde, score, xN, pc, p.seed(), record_from(p));
}

void run_sde_reverse(const Params& p, RunDir& dir) {
  const auto g = mixture_from(p);
  sample_report(dir, p, reverse_run(p, g, {0, 0.0}), g);
}

void run_pc_sample(const Params& p, RunDir& dir) {
  const auto g = mixture_from(p);
  const PcConfig pc{p.count("corrector-steps"), p.real("corrector-fraction")};
  sample_report(dir, p, reverse_run(p, g, pc), g);
}

// Fokker-Planck

Grid1D fp_grid(const Params& p, double d2_max) {
  const double dx = p.real("dx"), half = p.real("half-width");
  require(dx > 0 && half > dx, "need 0 < dx < half-width");
  const auto n = static_cast<std::size_t>(std::llround(2.0 * half / dx)) + 1;
  return {-half, half, n, p.real("dt-fraction") * dx * dx / d2_max};
}

void run_fp_heat(const Params& p, RunDir& dir) {
  const double k = p.real("k"), t0 = p.real("t0");
  const auto g = fp_grid(p, k);
  Vec p0(static_cast<Eigen::Index>(g.n));
  for (std::size_t i = 0; i < g.n; ++i) p0[static_cast<Eigen::Index>(i)] = heat_kernel(g.x(i), t0, k);
  const auto h = fp_evolve(FpCoefficients::heat(k), g, p0, t0, p.real("t-end"), p.reals("snapshots"));

  CsvWriter w(dir.file("density.csv"), {"t", "x", "p", "exact"});
  double linf = 0.0, drift = 0.0;
  for (std::size_t s = 0; s < h.times.size(); ++s) {
    const double t = h.times[s];
    for (std::size_t i = 0; i < g.n; ++i) {
      const double v = h.densities[s][static_cast<Eigen::Index>(i)], exact = heat_kernel(g.x(i), t, k);
      w.row({t, g.x(i), v, exact});
      if (s + 1 == h.times.size()) linf = std::max(linf, std::abs(v - exact));
    }
    drift = std::max(drift, std::abs(mass(h.densities[s], g.dx()) - mass(p0, g.dx())));
  }
  write_summary(dir.file("summary.csv"), {{"linf", linf}, {"mass_drift", drift}, {"dt", g.dt}});
}

void run_fp_equilibrium(const Params& p, RunDir& dir) {
  const double gamma = p.real("gamma"), kt_m = p.real("kt-m");
  require(gamma > 0 && kt_m > 0, "need gamma > 0 and kt-m > 0");
  const auto g = fp_grid(p, gamma * kt_m);
  const auto c = FpCoefficients::ornstein_uhlenbeck(gamma, gamma * kt_m);
  const Vec p0 = gaussian_density(g, p.real("start-mean"), p.real("start-var"));
  const double t_end = p.real("t-end");
  const auto h = fp_evolve(c, g, p0, 0.0, t_end, p.reals("snapshots"));
  const Vec eq = gaussian_density(g, 0.0, kt_m);

  CsvWriter w(dir.file("density.csv"), {"t", "x", "p"});
  double drift = 0.0;
  for (std::size_t s = 0; s < h.times.size(); ++s) {
    for (std::size_t i = 0; i < g.n; ++i) w.row({h.times[s], g.x(i), h.densities[s][static_cast<Eigen::Index>(i)]});
    drift = std::max(drift, std::abs(mass(h.densities[s], g.dx()) - mass(p0, g.dx())));
  }
  const Vec& last = h.densities.back();
  const Vec current = probability_current(c, g, last, t_end);
  CsvWriter cw(dir.file("current.csv"), {"x", "p", "equilibrium", "current"});
  for (std::size_t i = 0; i < g.n; ++i) {
    const auto j = static_cast<Eigen::Index>(i);
    cw.row({g.x(i), last[j], eq[j], current[j]});
  }
  write_summary(dir.file("summary.csv"), {{"linf_equilibrium", (last - eq).cwiseAbs().maxCoeff()},
                                          {"max_current", current.cwiseAbs().maxCoeff()},
                                          {"mass_drift", drift}});
}

void run_km_estimate(const Params& p, RunDir& dir) {
  const double gamma = p.real("gamma"), q = p.real("q");
  const auto& process = p.text("process");
  LangevinSde sde;
  std::function<double(double)> d1_exact, d2_exact;
  if (process == "ou") {
    sde = LangevinSde::ornstein_uhlenbeck(gamma, q);
    d1_exact = [=](double x) { return 0.0 - gamma * x; };
    d2_exact = [=](double) { return q / 2; };
  } else if (process == "wiener") {
    sde = {[](double) { return 0.0; }, [](double) { return 1.0; }, q};
    d1_exact = [](double) { return 0.0; };
    d2_exact = [=](double) { return q / 2; };
  } else {
    require(process == "multiplicative",
            "key 'process': expected ou, wiener or multiplicative, got '" + process + "'");
    sde = {[](double) { return 0.0; }, [](double x) { return x; }, q};
    d1_exact = [=](double x) { return q / 2 * x; };
    d2_exact = [=](double x) { return q / 2 * x * x; };
  }
  const auto ladder = p.reals("dt-ladder");
  CsvWriter cw(dir.file("coefficients.csv"),
               {"x", "d1", "d1_se", "d2", "d2_se", "d1_exact", "d2_exact"});
  CsvWriter lw(dir.file("ladder.csv"), {"x", "dt", "d1", "d2"});
  for (double x : p.reals("points")) {
    const auto k = km_estimate(sde, x, ladder, p.count("paths"), p.seed(), p.count("substeps"));
    cw.row({x, k.d1, k.d1_se, k.d2, k.d2_se, d1_exact(x), d2_exact(x)});
    for (std::size_t i = 0; i < k.dts.size(); ++i) lw.row({x, k.dts[i], k.d1_at[i], k.d2_at[i]});
  }
}

// ODE solvers

void run_ode_bench(const Params& p, RunDir& dir) {
  const OdeRhs f = [](double t, const Vec& x) -> Vec { return (x.array() + t * t - 2.0) / (t + 1.0); };
  const double t1 = p.real("t-end");
  const Vec x0 = Vec::Constant(1, p.real("x0"));
  const double ref = rk4_solve({f, x0, 0.0, t1, p.count("reference-steps")}).states.bottomRows(1)(0, 0);

  CsvWriter w(dir.file("errors.csv"), {"solver", "steps", "dt", "error"});
  std::vector<std::pair<std::string, double>> summary;
  for (int solver = 0; solver < 2; ++solver) {
    double prev = 0.0;
    std::size_t steps = p.count("steps");
    for (std::size_t h = 0; h <= p.count("halvings"); ++h, steps *= 2) {
      const OdeProblem prob{f, x0, 0.0, t1, steps};
      const auto tr = solver == 0 ? euler_solve(prob) : rk4_solve(prob);
      const double err = std::abs(tr.states.bottomRows(1)(0, 0) - ref);
      w.row({static_cast<double>(solver), static_cast<double>(steps), t1 / static_cast<double>(steps), err});
      if (h == 1) summary.emplace_back(solver == 0 ? "euler_ratio" : "rk4_ratio", prev / err);
      prev = err;
    }
  }
  const OdeProblem coarse{f, x0, 0.0, t1, p.count("steps")};
  const auto eu = euler_solve(coarse), rk = rk4_solve(coarse);
  CsvWriter tw(dir.file("trajectory.csv"), {"t", "euler", "rk4"});
  for (std::size_t k = 0; k < eu.times.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    tw.row({eu.times[k], eu.states(r, 0), rk.states(r, 0)});
  }
  write_summary(dir.file("summary.csv"), summary);
}

std::vector<Experiment> build_registry() {
  const auto bimodal = mixture_params("0.5,0.5", "-3,3", "1,1");
  const std::vector<ParamSpec> model_source{
      {"weights-file", "", "network weights from ddpm-train (empty uses the exact mixture oracle)"}};
  const std::vector<ParamSpec> chains{{"chains", "10000", "number of chains"}};

  std::vector<Experiment> r;
  r.push_back({"forward-gmm", "2.1", "Forward diffusion of a two-component mixture toward N(0, 1)",
               mixture_params("0.3,0.7", "-2,2", "0.2,1") +
                   std::vector<ParamSpec>{{"alpha", "0.97", "constant alpha_t"},
                                          {"steps", "50", "diffusion steps T"},
                                          {"samples", "100000", "one-shot draws of x_T"},
                                          {"x-min", "-6", "density grid start"},
                                          {"x-max", "6", "density grid end"},
                                          {"x-points", "241", "density grid size"}} +
                   recording("1", "200"),
               run_forward_gmm});
  r.push_back({"langevin", "3.1", "Langevin sampling of the two-peak mixture from uniform starts",
               mixture_params("0.6,0.4", "2,-2", "0.5,0.2") +
                   std::vector<ParamSpec>{{"chains", "10000", "number of chains M"},
                                          {"langevin-steps", "100", "Langevin iterations"},
                                          {"tau", "0.05", "step size"},
                                          {"noise", "true", "false gives plain gradient ascent"},
                                          {"start-lo", "-3", "uniform start lower bound"},
                                          {"start-hi", "3", "uniform start upper bound"}} +
                   recording("10", "200"),
               run_langevin});
  r.push_back({"ddpm-train", "2.6", "Train a noise (or x0) predicting network on the bimodal target",
               bimodal + schedule_params() +
                   std::vector<ParamSpec>{{"weighting", "unweighted", "unweighted or elbo"},
                                          {"data", "20000", "training set size"},
                                          {"hidden", "64,64", "hidden layer widths"},
                                          {"train-steps", "10000", "Adam steps"},
                                          {"batch", "512", "minibatch size"},
                                          {"lr", "2e-3", "initial learning rate"},
                                          {"final-lr-fraction", "0.05", "learning rate at the end, relative"}},
               run_ddpm_train});
  r.push_back({"ddpm-sample", "2.6", "Ancestral DDPM sampling from white noise",
               bimodal + schedule_params() + model_source + chains + recording("50", "200"),
               run_ddpm_sample});
  r.push_back({"ddim-sample", "2.7", "DDIM sampling on a uniform step subsequence",
               bimodal + schedule_params() + model_source + chains +
                   std::vector<ParamSpec>{{"ddim-steps", "20", "subsequence length S (0 = all steps)"},
                                          {"eta", "0", "0 deterministic, 1 matches DDPM"}} +
                   recording("1", "200"),
               run_ddim_sample});
  r.push_back({"vae-affine", "1.2", "Affine VAE trained on Gaussian data, compared with its optimum",
               {{"mean", "2", "data mean"},
                {"stddev", "0.5", "data standard deviation"},
                {"dim", "1", "data and latent dimension"},
                {"data", "10000", "training set size"},
                {"objective", "termwise", "termwise or joint"},
                {"train-steps", "4000", "Adam steps"},
                {"batch", "128", "minibatch size"},
                {"mc-samples", "8", "latent draws per data point"},
                {"lr", "1e-2", "initial learning rate"},
                {"final-lr-fraction", "0.02", "learning rate at the end, relative"}},
               run_vae_affine});
  r.push_back({"ncsn", "3.3", "Noise-conditional score training and annealed Langevin sampling",
               mixture_params("0.3,0.7", "-2,2", "0.5,0.5") +
                   std::vector<ParamSpec>{{"score", "trained", "trained or oracle"},
                                          {"sigma-min", "0.05", "smallest noise level"},
                                          {"sigma-max", "4", "largest noise level"},
                                          {"levels", "8", "noise levels L"},
                                          {"data", "20000", "training set size"},
                                          {"hidden", "32,32", "hidden layer widths"},
                                          {"train-steps", "6000", "Adam steps"},
                                          {"batch", "128", "minibatch size"},
                                          {"lr", "3e-3", "initial learning rate"},
                                          {"chains", "5000", "number of chains"},
                                          {"steps-per-level", "100", "Langevin steps at each level"},
                                          {"step-fraction", "0.1", "alpha_i = step-fraction * sigma_i^2"},
                                          {"start-lo", "-6", "uniform start lower bound"},
                                          {"start-hi", "6", "uniform start upper bound"}} +
                   recording("100", "200"),
               run_ncsn});
  r.push_back({"sde-forward", "4.3", "Forward VP or VE discretized SDE from the bimodal mixture",
               bimodal + sde_params() + recording("10", "200"), run_sde_forward});
  r.push_back({"sde-reverse", "4.3", "Reverse VP or VE sampling with exact mixture scores",
               bimodal + sde_params() + recording("10", "200"), run_sde_reverse});
  r.push_back({"pc-sample", "4.4", "Predictor-corrector VP sampling with Langevin corrections",
               bimodal + sde_params() +
                   std::vector<ParamSpec>{{"corrector-steps", "1", "Langevin corrections M per level"},
                                          {"corrector-fraction", "0.1", "eps_i = fraction * (1 - alpha_bar_i)"}} +
                   recording("10", "200"),
               run_pc_sample});
  r.push_back({"fp-heat", "5.4", "Heat equation from a narrow kernel, compared with the exact kernel",
               {{"k", "1", "diffusion constant D2"},
                {"t0", "0.01", "start time, the exact kernel seeds the grid"},
                {"t-end", "1", "final time"},
                {"snapshots", "0.1,0.25,0.5", "extra output times"},
                {"dx", "0.01", "grid spacing"},
                {"half-width", "12", "grid covers [-half-width, half-width]"},
                {"dt-fraction", "0.4", "dt = fraction * dx^2 / D2"}},
               run_fp_heat});
  r.push_back({"fp-equilibrium", "5.4", "Ornstein-Uhlenbeck density relaxing to its Boltzmann equilibrium",
               {{"gamma", "1.5", "friction gamma"},
                {"kt-m", "0.8", "kT / m"},
                {"start-mean", "1", "initial Gaussian mean"},
                {"start-var", "4", "initial Gaussian variance"},
                {"t-end", "6", "final time"},
                {"snapshots", "0.5,1,2,4", "extra output times"},
                {"dx", "0.02", "grid spacing"},
                {"half-width", "16", "grid covers [-half-width, half-width]"},
                {"dt-fraction", "0.4", "dt = fraction * dx^2 / D2"}},
               run_fp_equilibrium});
  r.push_back({"km-estimate", "5.3", "Kramers-Moyal coefficients from simulated Langevin increments",
               {{"process", "ou", "ou, wiener or multiplicative"},
                {"gamma", "1", "OU friction"},
                {"q", "2", "noise strength, E[G(t) G(t')] = q delta"},
                {"points", "-1,0,1", "states x at which to estimate"},
                {"dt-ladder", "0.2,0.1,0.05", "decreasing increments"},
                {"paths", "1000000", "paths per increment"},
                {"substeps", "20", "Heun steps per increment"}},
               run_km_estimate});
  r.push_back({"ode-bench", "4.4", "Euler and RK4 errors under step halving on a rational ODE",
               {{"x0", "2", "x(0)"},
                {"t-end", "1", "final time"},
                {"steps", "10", "coarsest step count"},
                {"halvings", "4", "number of step halvings"},
                {"reference-steps", "100000", "RK4 steps of the reference solution"}},
               run_ode_bench});
  return r;
}

}  // namespace

std::filesystem::path RunDir::file(const std::string& name) {
  if (std::find(artifacts_.begin(), artifacts_.end(), name) == artifacts_.end())
    artifacts_.push_back(name);
  return dir_ / name;
}

std::vector<ParamSpec> Experiment::all_params() const {
  std::vector<ParamSpec> out{{"seed", "0", "random seed"}};
  out.insert(out.end(), params.begin(), params.end());
  return out;
}

const std::vector<Experiment>& experiment_registry() {
  static const std::vector<Experiment> registry = build_registry();
  return registry;
}

const Experiment& find_experiment(const std::string& name) {
  for (const auto& e : experiment_registry())
    if (e.name == name) return e;
  throw std::invalid_argument("unknown experiment '" + name + "'");
}

void write_manifest(const std::filesystem::path& path, const Experiment& exp,
                    const Params& params, const std::vector<std::string>& artifacts) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), "cannot write " + path.string());
  out << "# difflab run --config " << path.filename().string() << " reproduces this run\n";
  out << "experiment = " << exp.name << '\n';
  for (const auto& [k, v] : params.entries()) out << k << " = " << v << '\n';
  for (const auto& a : artifacts) out << "# artifact " << a << '\n';
}

RunReport run_experiment(const std::string& name, const Config& config,
                         const std::filesystem::path& out_root) {
  Config given = config;
  std::string resolved = name;
  if (given.contains("experiment")) {
    const std::string listed = given.at("experiment");
    require(resolved.empty() || resolved == listed,
            "config is for experiment '" + listed + "', not '" + resolved + "'");
    resolved = listed;
    Config rest;
    for (const auto& [k, v] : given.values())
      if (k != "experiment") rest.set(k, v);
    given = rest;
  }
  require(!resolved.empty(), "no experiment named");
  const Experiment& exp = find_experiment(resolved);
  const Params params(exp.all_params(), given);

  RunDir dir(out_root / exp.name);
  std::filesystem::create_directories(dir.path());
  try {
    exp.run(params, dir);
  } catch (const NumericError& e) {
    throw NumericError(exp.name + ": " + e.what());
  }
  write_manifest(dir.path() / "manifest.txt", exp, params, dir.artifacts());
  return {dir.path(), dir.artifacts()};
}

}  // namespace difflab

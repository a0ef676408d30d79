#include "difflab/sde.hpp"

#include <cmath>

#include "difflab/error.hpp"

namespace difflab {

namespace {

template <typename Step>
Trajectory integrate(const OdeProblem& prob, const char* name, Step step) {
  require(static_cast<bool>(prob.f), std::string(name) + ": missing right-hand side");
  require(prob.steps >= 1, std::string(name) + ": need at least one step");
  require(prob.t1 != prob.t0, std::string(name) + ": empty time interval");
  const double h = (prob.t1 - prob.t0) / static_cast<double>(prob.steps);
  Trajectory tr;
  tr.times.resize(prob.steps + 1);
  tr.states.resize(static_cast<Eigen::Index>(prob.steps + 1), prob.x0.size());
  Vec x = prob.x0;
  tr.times[0] = prob.t0;
  tr.states.row(0) = x.transpose();
  for (std::size_t k = 0; k < prob.steps; ++k) {
    const double t = prob.t0 + static_cast<double>(k) * h;
    x = step(t, x, h);
    if (!x.allFinite()) throw NumericError(name, k + 1);
    tr.times[k + 1] = prob.t0 + static_cast<double>(k + 1) * h;
    tr.states.row(static_cast<Eigen::Index>(k + 1)) = x.transpose();
  }
  return tr;
}

}  // namespace

Trajectory euler_solve(const OdeProblem& prob) {
  return integrate(prob, "euler_solve", [&](double t, const Vec& x, double h) -> Vec {
    return x + h * prob.f(t, x);
  });
}

Trajectory rk4_solve(const OdeProblem& prob) {
  return integrate(prob, "rk4_solve", [&](double t, const Vec& x, double h) -> Vec {
    const Vec k1 = prob.f(t, x);
    const Vec k2 = prob.f(t + h / 2, x + (h / 2) * k1);
    const Vec k3 = prob.f(t + h / 2, x + (h / 2) * k2);
    const Vec k4 = prob.f(t + h, x + h * k3);
    return x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
  });
}

SdeParams SdeParams::vp(std::vector<double> betas) {
  require(!betas.empty(), "SdeParams::vp: empty beta sequence");
  for (double b : betas) require(b >= 0.0 && b < 1.0, "SdeParams::vp: beta must lie in [0, 1)");
  SdeParams p;
  p.kind = SdeKind::kVP;
  p.betas = std::move(betas);
  return p;
}

SdeParams SdeParams::ve(std::vector<double> sigmas) {
  require(sigmas.size() >= 2, "SdeParams::ve: need sigma_0..sigma_N with N >= 1");
  require(sigmas.front() >= 0.0, "SdeParams::ve: sigma_0 must be >= 0");
  for (std::size_t i = 1; i < sigmas.size(); ++i)
    require(sigmas[i] >= sigmas[i - 1], "SdeParams::ve: sigma ladder must be non-decreasing");
  SdeParams p;
  p.kind = SdeKind::kVE;
  p.sigmas = std::move(sigmas);
  return p;
}

std::size_t SdeParams::steps() const {
  return kind == SdeKind::kVP ? betas.size() : sigmas.size() - 1;
}

double SdeParams::alpha_bar(std::size_t i) const {
  require(kind == SdeKind::kVP && i <= betas.size(), "SdeParams::alpha_bar: VP level out of range");
  double ab = 1.0;
  for (std::size_t j = 0; j < i; ++j) ab *= 1.0 - betas[j];
  return ab;
}

LevelScore vp_mixture_score(const GaussianMixture& gmm, const SdeParams& params) {
  require(params.kind == SdeKind::kVP, "vp_mixture_score: VP parameters required");
  std::vector<GaussianMixture> levels;
  for (std::size_t i = 0; i <= params.steps(); ++i)
    levels.push_back(diffused_mixture(gmm, params.alpha_bar(i)));
  return [levels](const Mat& x, std::size_t i) { return mixture_score(levels.at(i), x); };
}

LevelScore ve_mixture_score(const GaussianMixture& gmm, const SdeParams& params) {
  require(params.kind == SdeKind::kVE, "ve_mixture_score: VE parameters required");
  std::vector<GaussianMixture> levels;
  const double s0 = params.sigmas.front();
  for (double s : params.sigmas) levels.push_back(convolved_mixture(gmm, std::sqrt(s * s - s0 * s0)));
  return [levels](const Mat& x, std::size_t i) { return mixture_score(levels.at(i), x); };
}

Ensemble sde_forward(const SdeParams& params, const Mat& x0, std::uint64_t seed,
                     RecordOptions record) {
  const std::size_t N = params.steps();
  StreamBank bank(seed, static_cast<std::size_t>(x0.rows()));
  EnsembleRecorder rec(record, seed, N);
  Mat x = x0;
  rec.offer(0, 0.0, x);
  for (std::size_t i = 1; i <= N; ++i) {
    const Mat z = bank.normal(x.cols());
    if (params.kind == SdeKind::kVP) {
      const double b = params.betas[i - 1];
      x = std::sqrt(1.0 - b) * x + std::sqrt(b) * z;
    } else {
      const double s = params.sigmas[i], sp = params.sigmas[i - 1];
      x += std::sqrt(s * s - sp * sp) * z;
    }
    if (!all_finite(x)) throw NumericError("sde_forward", i);
    rec.offer(i, static_cast<double>(i), x);
  }
  return rec.take();
}

namespace {

void reverse_step(const SdeParams& params, const LevelScore& score, std::size_t i, Mat& x,
                  StreamBank& bank) {
  const Mat s = score(x, i);
  const Mat z = bank.normal(x.cols());
  if (params.kind == SdeKind::kVP) {
    const double b = params.betas[i - 1];
    x = (x + b * s) / std::sqrt(1.0 - b) + std::sqrt(b) * z;
  } else {
    const double v = params.sigmas[i] * params.sigmas[i] - params.sigmas[i - 1] * params.sigmas[i - 1];
    x += v * s + std::sqrt(v) * z;
  }
}

}  // namespace

Ensemble sde_reverse(const SdeParams& params, const LevelScore& score, const Mat& x_N,
                     std::uint64_t seed, RecordOptions record) {
  return predictor_corrector(params, score, x_N, {0, 0.0}, seed, record);
}

Ensemble predictor_corrector(const SdeParams& params, const LevelScore& score,
                             const Mat& x_N, const PcConfig& config, std::uint64_t seed,
                             RecordOptions record) {
  require(static_cast<bool>(score), "predictor_corrector: missing score");
  require(config.corrector_steps == 0 || params.kind == SdeKind::kVP,
          "predictor_corrector: correction is defined for VP parameters");
  require(config.corrector_fraction >= 0.0, "predictor_corrector: negative corrector fraction");
  const std::size_t N = params.steps();
  StreamBank bank(seed, static_cast<std::size_t>(x_N.rows()));
  EnsembleRecorder rec(record, seed, N);
  Mat x = x_N;
  rec.offer(0, static_cast<double>(N), x);
  for (std::size_t i = N; i >= 1; --i) {
    reverse_step(params, score, i, x, bank);
    if (config.corrector_steps > 0) {
      const double eps = config.corrector_fraction * (1.0 - params.alpha_bar(i - 1));
      for (std::size_t m = 0; m < config.corrector_steps && eps > 0.0; ++m) {
        x += eps * score(x, i - 1);
        x += std::sqrt(2.0 * eps) * bank.normal(x.cols());
      }
    }
    if (!all_finite(x)) throw NumericError("sde_reverse", N - i + 1);
    rec.offer(N - i + 1, static_cast<double>(i - 1), x);
  }
  return rec.take();
}

}  // namespace difflab

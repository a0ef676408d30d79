#include "difflab/score.hpp"

#include <cmath>

#include "difflab/error.hpp"

namespace difflab {

namespace {

LossEstimate summarize(const Vec& per_row) {
  const double n = static_cast<double>(per_row.size());
  LossEstimate e;
  e.mean = per_row.mean();
  if (per_row.size() > 1) {
    const double var = (per_row.array() - e.mean).square().sum() / (n - 1.0);
    e.std_error = std::sqrt(var / n);
  }
  return e;
}

}  // namespace

ScoreFn mixture_score_fn(const GaussianMixture& gmm) {
  return [gmm](const Mat& x) { return mixture_score(gmm, x); };
}

NoisyScoreFn convolved_score_fn(const GaussianMixture& gmm) {
  return [gmm](const Mat& x, double sigma) {
    return mixture_score(convolved_mixture(gmm, sigma), x);
  };
}

ScoreFn mlp_score_fn(const Mlp& net) {
  return [net](const Mat& x) { return net.forward(x, 0.0); };
}

Ensemble langevin_sample(const ScoreFn& score, const Mat& x0, const LangevinConfig& config,
                         std::uint64_t seed, RecordOptions record, NoiseAudit* audit) {
  require(config.step_size > 0.0, "langevin_sample: step size must be > 0");
  require(config.steps >= 1, "langevin_sample: need at least one step");
  StreamBank bank(seed, static_cast<std::size_t>(x0.rows()));
  EnsembleRecorder rec(record, seed, config.steps);
  const double tau = config.step_size;
  const double scale = std::sqrt(2.0 * tau);
  Mat x = x0;
  rec.offer(0, 0.0, x);
  for (std::size_t k = 1; k <= config.steps; ++k) {
    x += tau * score(x);
    if (config.noise) {
      const Mat dz = scale * bank.normal(x.cols());
      x += dz;
      if (audit) {
        audit->scale.push_back(scale);
        audit->injected_rms.push_back(std::sqrt(dz.squaredNorm() / static_cast<double>(dz.size())));
      }
    }
    if (!all_finite(x)) throw NumericError("langevin_sample", k);
    rec.offer(k, static_cast<double>(k) * tau, x);
  }
  return rec.take();
}

Mat uniform_start(std::size_t n, Eigen::Index d, double lo, double hi, std::uint64_t seed) {
  StreamBank bank(seed, n);
  Mat x(static_cast<Eigen::Index>(n), d);
  for (std::size_t i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), j) = bank[i].uniform(lo, hi);
  return x;
}

LossEstimate esm_loss(const ScoreFn& model, const ScoreFn& reference, const Mat& x) {
  require(x.rows() >= 1, "esm_loss: empty batch");
  return summarize(0.5 * (model(x) - reference(x)).rowwise().squaredNorm());
}

LossEstimate ism_loss(const ScoreFn& model, const Mat& x, double fd_step) {
  require(x.rows() >= 1, "ism_loss: empty batch");
  require(fd_step > 0.0, "ism_loss: fd_step must be > 0");
  const Mat s = model(x);
  Vec per_row = 0.5 * s.rowwise().squaredNorm();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    Mat hi = x, lo = x;
    hi.col(j).array() += fd_step;
    lo.col(j).array() -= fd_step;
    per_row += (model(hi).col(j) - model(lo).col(j)) / (2.0 * fd_step);
  }
  return summarize(per_row);
}

LossEstimate dsm_loss(const ScoreFn& model, const Mat& x0, double sigma, StreamBank& bank) {
  require(sigma > 0.0, "dsm_loss: sigma must be > 0");
  require(static_cast<Eigen::Index>(bank.size()) == x0.rows(),
          "dsm_loss: one stream per row required");
  const Mat z = bank.normal(x0.cols());
  const Mat s = model(x0 + sigma * z);
  return summarize(0.5 * (s + z / sigma).rowwise().squaredNorm());
}

ScoreModel ScoreModel::random(Eigen::Index dim, std::vector<Eigen::Index> hidden,
                              SigmaLadder ladder, Rng& rng) {
  return ScoreModel{Mlp::random({dim, std::move(hidden), dim, true}, rng), std::move(ladder)};
}

Mat ScoreModel::operator()(const Mat& x, double sigma) const {
  return net.forward(x, std::log(sigma)) / sigma;
}

NoisyScoreFn ScoreModel::fn() const {
  return [m = *this](const Mat& x, double sigma) { return m(x, sigma); };
}

NcsnLoss ncsn_loss(const NoisyScoreFn& model, const Mat& x0, const SigmaLadder& ladder,
                   std::uint64_t seed) {
  require(ladder.size() >= 1, "ncsn_loss: empty ladder");
  NcsnLoss out;
  Vec acc = Vec::Zero(x0.rows());
  const std::size_t n = static_cast<std::size_t>(x0.rows());
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    const double sigma = ladder[i];
    StreamBank bank(seed, n, i * n);
    const Mat z = bank.normal(x0.cols());
    const Mat s = model(x0 + sigma * z, sigma);
    const Vec per_row = 0.5 * sigma * sigma * (s + z / sigma).rowwise().squaredNorm();
    out.weighted.push_back(per_row.mean());
    acc += per_row;
  }
  out.total = summarize(acc / static_cast<double>(ladder.size()));
  return out;
}

FitResult train_ncsn(ScoreModel& model, const Mat& data, std::size_t steps, std::size_t batch,
                     double learning_rate, Rng& rng, double final_lr_fraction) {
  require(data.rows() >= 1 && batch >= 1, "train_ncsn: empty data or batch");
  require(model.net.shape().data_dim == data.cols(), "train_ncsn: dimension mismatch");
  const auto B = static_cast<Eigen::Index>(batch);
  const Eigen::Index d = data.cols();
  const auto L = static_cast<std::int64_t>(model.ladder.size());
  Mat xn(B, d), z(B, d);
  Vec cond(B);
  // sigma^2 * 1/2 ||net / sigma + z / sigma||^2 = 1/2 ||net + z||^2.
  LossSampler sampler = [&](const Mlp& net, Vec& grad, Rng& r) {
    for (Eigen::Index i = 0; i < B; ++i) {
      const double sigma = model.ladder[static_cast<std::size_t>(r.uniform_int(0, L - 1))];
      z.row(i) = r.normal_vec(d).transpose();
      xn.row(i) = data.row(r.uniform_int(0, data.rows() - 1)) + sigma * z.row(i);
      cond[i] = std::log(sigma);
    }
    MlpTape tape;
    const Mat resid = net.forward(xn, cond, tape) + z;
    grad = net.backward(tape, resid / static_cast<double>(B)).params;
    return 0.5 * resid.squaredNorm() / static_cast<double>(B);
  };
  Adam opt({learning_rate}, model.net.num_parameters());
  return fit(model.net, sampler, steps, opt, rng, final_lr_fraction);
}

FitResult train_dsm(Mlp& net, const Mat& data, double sigma, std::size_t steps,
                    std::size_t batch, double learning_rate, Rng& rng,
                    double final_lr_fraction) {
  require(sigma > 0.0, "train_dsm: sigma must be > 0");
  require(data.rows() >= 1 && batch >= 1, "train_dsm: empty data or batch");
  const auto B = static_cast<Eigen::Index>(batch);
  const Eigen::Index d = data.cols();
  Mat xn(B, d), z(B, d);
  const Vec cond = Vec::Zero(B);
  LossSampler sampler = [&](const Mlp& m, Vec& grad, Rng& r) {
    for (Eigen::Index i = 0; i < B; ++i) {
      z.row(i) = r.normal_vec(d).transpose();
      xn.row(i) = data.row(r.uniform_int(0, data.rows() - 1)) + sigma * z.row(i);
    }
    MlpTape tape;
    const Mat resid = m.forward(xn, cond, tape) + z / sigma;
    grad = m.backward(tape, resid / static_cast<double>(B)).params;
    return 0.5 * resid.squaredNorm() / static_cast<double>(B);
  };
  Adam opt({learning_rate}, net.num_parameters());
  return fit(net, sampler, steps, opt, rng, final_lr_fraction);
}

Ensemble annealed_langevin_sample(const NoisyScoreFn& score, const SigmaLadder& ladder,
                                  const Mat& x0, const AnnealedConfig& config,
                                  std::uint64_t seed, RecordOptions record) {
  require(config.steps_per_level >= 1, "annealed_langevin_sample: need steps per level");
  require(config.step_fraction > 0.0, "annealed_langevin_sample: step_fraction must be > 0");
  StreamBank bank(seed, static_cast<std::size_t>(x0.rows()));
  const std::size_t total = ladder.size() * config.steps_per_level;
  EnsembleRecorder rec(record, seed, total);
  Mat x = x0;
  rec.offer(0, 0.0, x);
  std::size_t k = 0;
  for (std::size_t lvl = ladder.size(); lvl-- > 0;) {
    const double sigma = ladder[lvl];
    const double alpha = config.step_fraction * sigma * sigma;
    for (std::size_t j = 0; j < config.steps_per_level; ++j) {
      ++k;
      x += 0.5 * alpha * score(x, sigma);
      x += std::sqrt(alpha) * bank.normal(x.cols());
      if (!all_finite(x)) throw NumericError("annealed_langevin_sample", k);
      rec.offer(k, static_cast<double>(k), x);
    }
  }
  return rec.take();
}

}  // namespace difflab

#include "difflab/ddpm.hpp"

#include <cmath>
#include <string>

#include "difflab/error.hpp"

namespace difflab {

PosteriorParams posterior_params(const NoiseSchedule& schedule, std::size_t t) {
  require(t >= 1 && t <= schedule.steps(), "posterior_params: t out of range");
  const double a = schedule.alpha(t);
  const double ab = schedule.alpha_bar(t);
  const double ab_prev = schedule.alpha_bar(t - 1);
  PosteriorParams p;
  p.coef_xt = (1.0 - ab_prev) * std::sqrt(a) / (1.0 - ab);
  p.coef_x0 = (1.0 - a) * std::sqrt(ab_prev) / (1.0 - ab);
  p.variance = (1.0 - a) * (1.0 - ab_prev) / (1.0 - ab);
  return p;
}

Vec forward_sample(const Vec& x0, std::size_t t, const NoiseSchedule& schedule, Rng& rng) {
  require(t <= schedule.steps(), "forward_sample: t out of range");
  const double ab = schedule.alpha_bar(t);
  if (t == 0) return x0;
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * rng.normal_vec(x0.size());
}

Mat forward_sample(const Mat& x0, std::size_t t, const NoiseSchedule& schedule,
                   StreamBank& bank) {
  require(t <= schedule.steps(), "forward_sample: t out of range");
  require(static_cast<Eigen::Index>(bank.size()) == x0.rows(),
          "forward_sample: one stream per row required");
  if (t == 0) return x0;
  const double ab = schedule.alpha_bar(t);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * bank.normal(x0.cols());
}

Mat forward_chain(const Mat& x0, std::size_t t, const NoiseSchedule& schedule,
                  StreamBank& bank) {
  require(t <= schedule.steps(), "forward_chain: t out of range");
  require(static_cast<Eigen::Index>(bank.size()) == x0.rows(),
          "forward_chain: one stream per row required");
  Mat x = x0;
  for (std::size_t i = 1; i <= t; ++i) {
    const double a = schedule.alpha(i);
    x = std::sqrt(a) * x + std::sqrt(1.0 - a) * bank.normal(x.cols());
  }
  return x;
}

Ensemble forward_trajectory(const Mat& x0, const NoiseSchedule& schedule,
                            std::uint64_t seed, RecordOptions record) {
  StreamBank bank(seed, static_cast<std::size_t>(x0.rows()));
  const std::size_t T = schedule.steps();
  EnsembleRecorder rec(record, seed, T);
  Mat x = x0;
  rec.offer(0, 0.0, x);
  for (std::size_t i = 1; i <= T; ++i) {
    const double a = schedule.alpha(i);
    x = std::sqrt(a) * x + std::sqrt(1.0 - a) * bank.normal(x.cols());
    rec.offer(i, static_cast<double>(i), x);
  }
  return rec.take();
}

Predictor mlp_predictor(const Mlp& net, std::size_t steps) {
  require(steps >= 1, "mlp_predictor: steps must be >= 1");
  return [net, steps](const Mat& x, std::size_t t) {
    return net.forward(x, static_cast<double>(t) / static_cast<double>(steps));
  };
}

Predictor mixture_oracle(const GaussianMixture& gmm, const NoiseSchedule& schedule,
                         Prediction mode) {
  return [gmm, schedule, mode](const Mat& x, std::size_t t) {
    const double ab = schedule.alpha_bar(t);
    return mode == Prediction::kX0 ? mixture_posterior_mean(gmm, x, ab)
                                   : mixture_posterior_noise(gmm, x, ab);
  };
}

double loss_weight(const NoiseSchedule& schedule, std::size_t t, Prediction mode) {
  require(t >= 1 && t <= schedule.steps(), "loss_weight: t out of range");
  const double a = schedule.alpha(t);
  const double ab = schedule.alpha_bar(t);
  const double ab_prev = schedule.alpha_bar(t - 1);
  double var = posterior_params(schedule, t).variance;
  if (t == 1) var = schedule.beta(1);
  if (mode == Prediction::kX0)
    return (1.0 - a) * (1.0 - a) * ab_prev / (2.0 * var * (1.0 - ab) * (1.0 - ab));
  return (1.0 - a) * (1.0 - a) / (2.0 * var * a * (1.0 - ab));
}

double training_loss(const DdpmModel& model, const Vec& x0, std::size_t t, Rng& rng,
                     LossWeighting weighting) {
  const auto& s = model.schedule;
  require(t >= 1 && t <= s.steps(), "training_loss: t out of range");
  const Vec eps = rng.normal_vec(x0.size());
  const double ab = s.alpha_bar(t);
  const Vec xt = std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
  const Vec pred = model.predictor(xt.transpose(), t).row(0).transpose();
  const Vec& target = model.mode == Prediction::kX0 ? x0 : eps;
  const double w =
      weighting == LossWeighting::kElbo ? loss_weight(s, t, model.mode) : 1.0;
  return w * (pred - target).squaredNorm();
}

FitResult train_ddpm(Mlp& net, const Mat& data, const NoiseSchedule& schedule,
                     const DdpmTrainConfig& config, Rng& rng) {
  require(data.rows() >= 1, "train_ddpm: empty data");
  require(config.batch >= 1, "train_ddpm: batch must be >= 1");
  require(config.fixed_t <= schedule.steps(), "train_ddpm: fixed_t out of range");
  require(net.shape().data_dim == data.cols() && net.shape().output_dim == data.cols(),
          "train_ddpm: network shape does not match data");
  const auto T = static_cast<std::int64_t>(schedule.steps());
  const auto B = static_cast<Eigen::Index>(config.batch);
  const Eigen::Index d = data.cols();

  Mat xt(B, d), target(B, d);
  Vec cond(B), weight(B);
  LossSampler sampler = [&](const Mlp& m, Vec& grad, Rng& r) {
    for (Eigen::Index i = 0; i < B; ++i) {
      const auto t = static_cast<std::size_t>(
          config.fixed_t > 0 ? static_cast<std::int64_t>(config.fixed_t)
                             : r.uniform_int(1, T));
      const Vec x0 = data.row(r.uniform_int(0, data.rows() - 1)).transpose();
      const Vec eps = r.normal_vec(d);
      const double ab = schedule.alpha_bar(t);
      xt.row(i) = (std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps).transpose();
      target.row(i) = (config.mode == Prediction::kX0 ? x0 : eps).transpose();
      cond[i] = static_cast<double>(t) / static_cast<double>(T);
      weight[i] = config.weighting == LossWeighting::kElbo
                      ? loss_weight(schedule, t, config.mode)
                      : 1.0;
    }
    MlpTape tape;
    const Mat diff = m.forward(xt, cond, tape) - target;
    const double loss =
        (diff.rowwise().squaredNorm().array() * weight.array()).sum() / static_cast<double>(B);
    const Mat g = (2.0 / static_cast<double>(B)) * (weight.asDiagonal() * diff);
    grad = m.backward(tape, g).params;
    return loss;
  };
  Adam opt({config.learning_rate}, net.num_parameters());
  return fit(net, sampler, config.steps, opt, rng, config.final_lr_fraction);
}

Ensemble ancestral_sample(const DdpmModel& model, std::size_t chains, Eigen::Index dim,
                          std::uint64_t seed, RecordOptions record) {
  // Stream block [0, chains) draws x_T; the reverse steps use the next block.
  StreamBank init(seed, chains, chains);
  return ancestral_sample(model, init.normal(dim), seed, record);
}

Ensemble ancestral_sample(const DdpmModel& model, const Mat& x_T, std::uint64_t seed,
                          RecordOptions record) {
  require(static_cast<bool>(model.predictor), "ancestral_sample: missing predictor");
  const auto& s = model.schedule;
  const std::size_t T = s.steps();
  StreamBank bank(seed, static_cast<std::size_t>(x_T.rows()));
  EnsembleRecorder rec(record, seed, T);
  Mat x = x_T;
  rec.offer(0, static_cast<double>(T), x);
  for (std::size_t t = T; t >= 1; --t) {
    const Mat pred = model.predictor(x, t);
    const PosteriorParams p = posterior_params(s, t);
    if (model.mode == Prediction::kX0) {
      x = p.coef_xt * x + p.coef_x0 * pred;
    } else {
      const double a = s.alpha(t);
      x = (x - ((1.0 - a) / std::sqrt(1.0 - s.alpha_bar(t))) * pred) / std::sqrt(a);
    }
    if (t > 1) x += std::sqrt(p.variance) * bank.normal(x.cols());
    if (!all_finite(x)) throw NumericError("ancestral_sample", T - t + 1);
    rec.offer(T - t + 1, static_cast<double>(t - 1), x);
  }
  return rec.take();
}

}  // namespace difflab

#include "difflab/vae.hpp"

#include <cmath>

#include "difflab/error.hpp"

namespace difflab {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double softplus(double r) { return r > 30.0 ? r : std::log1p(std::exp(r)); }
double softplus_inverse(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }
double sigmoid(double r) { return 1.0 / (1.0 + std::exp(-r)); }

}  // namespace

AffineVae AffineVae::identity(Eigen::Index d) {
  AffineVae v;
  v.b = Vec::Zero(d);
  v.v = Vec::Zero(d);
  return v;
}

Vec AffineVae::pack() const {
  const Eigen::Index d = dim();
  Vec f(2 * d + 4);
  f[0] = a;
  f.segment(1, d) = b;
  f[d + 1] = t;
  f[d + 2] = c;
  f.segment(d + 3, d) = v;
  f[2 * d + 3] = s;
  return f;
}

AffineVae AffineVae::unpack(const Vec& f, Eigen::Index d) {
  require(f.size() == 2 * d + 4, "AffineVae::unpack: size mismatch");
  AffineVae out;
  out.a = f[0];
  out.b = f.segment(1, d);
  out.t = f[d + 1];
  out.c = f[d + 2];
  out.v = f.segment(d + 3, d);
  out.s = f[2 * d + 3];
  return out;
}

Mat IsotropicGaussian::sample(std::size_t n, Rng& rng) const {
  Mat x(static_cast<Eigen::Index>(n), mean.size());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = mean[j] + stddev * rng.normal();
  return x;
}

double IsotropicGaussian::log_pdf(const Vec& x) const {
  const double d = static_cast<double>(mean.size());
  return -0.5 * d * kLog2Pi - d * std::log(stddev) -
         0.5 * (x - mean).squaredNorm() / (stddev * stddev);
}

AffineVae standardizing_optimum(const IsotropicGaussian& data) {
  AffineVae v;
  v.a = 1.0 / data.stddev;
  v.b = -data.mean / data.stddev;
  v.t = 1.0;
  v.c = data.stddev;
  v.v = data.mean;
  v.s = data.stddev;
  return v;
}

Vec reparam_sample(const Vec& mu, double std, Rng& rng) {
  require(std >= 0.0, "reparam_sample: std must be >= 0");
  if (std == 0.0) return mu;
  return mu + std * rng.normal_vec(mu.size());
}

ElboBreakdown elbo(const AffineVae& vae, const Vec& x, std::size_t M, Rng& rng) {
  require(M >= 1, "elbo: need at least one Monte Carlo sample");
  Mat eps(static_cast<Eigen::Index>(M), vae.dim());
  for (Eigen::Index m = 0; m < eps.rows(); ++m) eps.row(m) = rng.normal_vec(vae.dim()).transpose();
  return elbo(vae, x, eps);
}

ElboBreakdown elbo(const AffineVae& vae, const Vec& x, const Mat& eps) {
  require(vae.t > 0.0, "elbo: encoder std t must be > 0");
  require(vae.s > 0.0, "elbo: decoder std s must be > 0");
  require(x.size() == vae.dim() && eps.cols() == vae.dim(), "elbo: dimension mismatch");
  require(eps.rows() >= 1, "elbo: need at least one Monte Carlo sample");
  const double d = static_cast<double>(vae.dim());
  const Vec m = vae.a * x + vae.b;
  double sq = 0.0;
  for (Eigen::Index k = 0; k < eps.rows(); ++k) {
    const Vec z = m + vae.t * eps.row(k).transpose();
    sq += (x - (vae.c * z + vae.v)).squaredNorm();
  }
  ElboBreakdown out;
  out.reconstruction = -sq / static_cast<double>(eps.rows()) / (2.0 * vae.s * vae.s) -
                       d * std::log(vae.s) - 0.5 * d * kLog2Pi;
  out.prior_matching =
      0.5 * (vae.t * vae.t * d - d + m.squaredNorm() - 2.0 * d * std::log(vae.t));
  return out;
}

Vec elbo_gradient(const AffineVae& vae, const Vec& x, const Mat& eps) {
  require(vae.t > 0.0 && vae.s > 0.0, "elbo_gradient: t and s must be > 0");
  const Eigen::Index dd = vae.dim();
  const double d = static_cast<double>(dd);
  const double M = static_cast<double>(eps.rows());
  const double s2 = vae.s * vae.s;
  const Vec m = vae.a * x + vae.b;

  double ga = 0.0, gt = 0.0, gc = 0.0, gs = 0.0;
  Vec gb = Vec::Zero(dd), gv = Vec::Zero(dd);
  for (Eigen::Index k = 0; k < eps.rows(); ++k) {
    const Vec e = eps.row(k).transpose();
    const Vec z = m + vae.t * e;
    const Vec r = x - (vae.c * z + vae.v);
    // d recon / d z = c r / (s^2 M)
    const Vec gz = vae.c * r / (s2 * M);
    ga += gz.dot(x);
    gb += gz;
    gt += gz.dot(e);
    gc += r.dot(z) / (s2 * M);
    gv += r / (s2 * M);
    gs += r.squaredNorm() / (s2 * vae.s * M);
  }
  gs -= d / vae.s;
  // Minus the prior-matching gradient.
  ga -= m.dot(x);
  gb -= m;
  gt -= vae.t * d - d / vae.t;

  AffineVae g;
  g.a = ga;
  g.b = gb;
  g.t = gt;
  g.c = gc;
  g.v = gv;
  g.s = gs;
  return g.pack();
}

double model_log_evidence(const AffineVae& vae, const Vec& x) {
  const double var = vae.c * vae.c + vae.s * vae.s;
  const double d = static_cast<double>(vae.dim());
  return -0.5 * d * (kLog2Pi + std::log(var)) - 0.5 * (x - vae.v).squaredNorm() / var;
}

namespace {

// Unconstrained training coordinates: t and s through softplus.
Vec to_unconstrained(const AffineVae& vae) {
  Vec f = vae.pack();
  const Eigen::Index d = vae.dim();
  f[d + 1] = softplus_inverse(vae.t);
  f[2 * d + 3] = softplus_inverse(vae.s);
  return f;
}

AffineVae from_unconstrained(const Vec& f, Eigen::Index d) {
  AffineVae v = AffineVae::unpack(f, d);
  v.t = softplus(f[d + 1]);
  v.s = softplus(f[2 * d + 3]);
  return v;
}

// Ascent direction for the termwise objective, in pack() order.
Vec termwise_gradient(const AffineVae& vae, const Mat& xb, const Mat& eps_all,
                      std::size_t M) {
  const Eigen::Index dd = vae.dim();
  const double d = static_cast<double>(dd);
  const double n = static_cast<double>(xb.rows());
  AffineVae g = AffineVae::identity(dd);
  g.a = g.t = g.c = g.s = 0.0;

  // Means: decoder reconstructs the encoder mean by least squares, encoder
  // latent moments are matched to N(0, I).
  const Vec xbar = xb.colwise().mean().transpose();
  Vec var_x(dd);
  for (Eigen::Index j = 0; j < dd; ++j)
    var_x[j] = (xb.col(j).array() - xbar[j]).square().mean();
  for (Eigen::Index i = 0; i < xb.rows(); ++i) {
    const Vec x = xb.row(i).transpose();
    const Vec m = vae.a * x + vae.b;
    const Vec r = x - (vae.c * m + vae.v);
    g.a += vae.c * r.dot(x) / n;
    g.b += vae.c * r / n;
    g.c += r.dot(m) / n;
    g.v += r / n;
  }
  const Vec mbar = vae.a * xbar + vae.b;
  for (Eigen::Index j = 0; j < dd; ++j)
    g.a -= vae.a * var_x[j] - 1.0 / vae.a + mbar[j] * xbar[j];
  g.b -= mbar;

  // Variances: t from the prior matching term, s from the reconstruction term.
  g.t = -(vae.t * d - d / vae.t);
  for (Eigen::Index i = 0; i < xb.rows(); ++i) {
    const Vec x = xb.row(i).transpose();
    const Mat eps = eps_all.middleRows(i * static_cast<Eigen::Index>(M),
                                       static_cast<Eigen::Index>(M));
    const Vec full = elbo_gradient(vae, x, eps);
    // Reconstruction-only s derivative equals the full one (the prior
    // matching term does not depend on s).
    g.s += full[2 * dd + 3] / n;
  }
  return g.pack();
}

}  // namespace

VaeTrainResult train_affine_vae(const Mat& data, const AffineVae& init,
                                const VaeTrainConfig& config, Rng& rng) {
  require(data.rows() >= 100, "train_affine_vae: need at least 100 data points");
  require(data.cols() == init.dim(), "train_affine_vae: dimension mismatch");
  require(config.batch >= 1 && config.mc_samples >= 1, "train_affine_vae: bad config");
  require(init.t > 0.0 && init.s > 0.0, "train_affine_vae: t and s must be > 0");
  const Eigen::Index d = init.dim();
  VaeTrainResult res;
  res.vae = init;
  if (config.steps == 0) return res;

  Vec theta = to_unconstrained(init);
  Adam opt({config.learning_rate}, theta.size());
  const auto M = static_cast<Eigen::Index>(config.mc_samples);
  const auto B = static_cast<Eigen::Index>(config.batch);
  Mat xb(B, d), eps(B * M, d);
  for (std::size_t step = 0; step < config.steps; ++step) {
    const AffineVae vae = from_unconstrained(theta, d);
    for (Eigen::Index i = 0; i < B; ++i)
      xb.row(i) = data.row(rng.uniform_int(0, data.rows() - 1));
    for (Eigen::Index k = 0; k < eps.rows(); ++k)
      for (Eigen::Index j = 0; j < d; ++j) eps(k, j) = rng.normal();

    double mean_elbo = 0.0;
    Vec grad = Vec::Zero(theta.size());
    for (Eigen::Index i = 0; i < B; ++i) {
      const Vec x = xb.row(i).transpose();
      const Mat e = eps.middleRows(i * M, M);
      mean_elbo += elbo(vae, x, e).total() / static_cast<double>(B);
      if (config.objective == VaeObjective::kJointElbo)
        grad += elbo_gradient(vae, x, e) / static_cast<double>(B);
    }
    if (config.objective == VaeObjective::kTermwise)
      grad = termwise_gradient(vae, xb, eps, config.mc_samples);

    // Chain rule through softplus.
    grad[d + 1] *= sigmoid(theta[d + 1]);
    grad[2 * d + 3] *= sigmoid(theta[2 * d + 3]);
    if (!std::isfinite(mean_elbo) || !grad.allFinite())
      throw NumericError("train_affine_vae", step);

    const double frac = static_cast<double>(step) / static_cast<double>(config.steps);
    const double lr =
        config.learning_rate * (1.0 - frac * (1.0 - config.final_lr_fraction));
    opt.set_learning_rate(lr);
    opt.step(theta, -grad);
    res.mean_elbo.push_back(mean_elbo);
  }
  res.vae = from_unconstrained(theta, d);
  return res;
}

MlpVae MlpVae::random(Eigen::Index data_dim, Eigen::Index latent_dim,
                      std::vector<Eigen::Index> hidden, Rng& rng) {
  MlpShape enc{data_dim, hidden, 2 * latent_dim, false};
  MlpShape dec{latent_dim, hidden, data_dim, false};
  return MlpVae{Mlp::random(enc, rng), Mlp::random(dec, rng), latent_dim};
}

MlpVaeElbo mlp_vae_elbo(const MlpVae& vae, const Mat& x, const Mat& eps) {
  require(eps.rows() == x.rows() && eps.cols() == vae.latent_dim,
          "mlp_vae_elbo: eps shape mismatch");
  const Eigen::Index dz = vae.latent_dim;
  const double n = static_cast<double>(x.rows());
  const double dx = static_cast<double>(x.cols());
  const Vec none = Vec::Zero(x.rows());

  MlpTape enc_tape, dec_tape;
  const Mat h = vae.encoder.forward(x, none, enc_tape);
  const Mat mu = h.leftCols(dz);
  const Mat rho = h.rightCols(dz);
  Mat sd = rho.unaryExpr([](double r) { return softplus(r); });
  const Mat z = mu + sd.cwiseProduct(eps);
  const Mat mean = vae.decoder.forward(z, none, dec_tape);
  const Mat r = x - mean;

  MlpVaeElbo out;
  const double recon = -0.5 * r.squaredNorm() / n - 0.5 * dx * kLog2Pi;
  const double kl = 0.5 * (sd.array().square() + mu.array().square() - 1.0 -
                           2.0 * sd.array().log()).sum() / n;
  out.mean_elbo = recon - kl;

  const auto dec_grads = vae.decoder.backward(dec_tape, r / n);
  const Mat& gz = dec_grads.input;
  Mat gh(x.rows(), 2 * dz);
  gh.leftCols(dz) = gz - mu / n;
  const Mat gsd = gz.cwiseProduct(eps) - (sd - sd.cwiseInverse()) / n;
  gh.rightCols(dz) = gsd.cwiseProduct(rho.unaryExpr([](double v) { return sigmoid(v); }));
  const auto enc_grads = vae.encoder.backward(enc_tape, gh);

  out.grad.resize(enc_grads.params.size() + dec_grads.params.size());
  out.grad << enc_grads.params, dec_grads.params;
  return out;
}

std::vector<double> train_mlp_vae(MlpVae& vae, const Mat& data, std::size_t steps,
                                  std::size_t batch, double learning_rate, Rng& rng) {
  require(data.rows() >= 1, "train_mlp_vae: empty data");
  const Eigen::Index ne = vae.encoder.num_parameters();
  Vec theta(ne + vae.decoder.num_parameters());
  theta << vae.encoder.parameters(), vae.decoder.parameters();
  Adam opt({learning_rate}, theta.size());
  std::vector<double> curve;
  const auto B = static_cast<Eigen::Index>(batch);
  Mat xb(B, data.cols()), eps(B, vae.latent_dim);
  for (std::size_t step = 0; step < steps; ++step) {
    for (Eigen::Index i = 0; i < B; ++i) {
      xb.row(i) = data.row(rng.uniform_int(0, data.rows() - 1));
      for (Eigen::Index j = 0; j < vae.latent_dim; ++j) eps(i, j) = rng.normal();
    }
    const auto res = mlp_vae_elbo(vae, xb, eps);
    if (!std::isfinite(res.mean_elbo) || !res.grad.allFinite())
      throw NumericError("train_mlp_vae", step);
    opt.step(theta, -res.grad);
    vae.encoder.set_parameters(theta.head(ne));
    vae.decoder.set_parameters(theta.tail(theta.size() - ne));
    curve.push_back(res.mean_elbo);
  }
  return curve;
}

}  // namespace difflab

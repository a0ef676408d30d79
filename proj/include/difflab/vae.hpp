#pragma once

#include <vector>

#include "difflab/nn.hpp"
#include "difflab/rng.hpp"
#include "difflab/types.hpp"

namespace difflab {

// Encoder q(z|x) = N(a x + b, t^2 I), decoder p(x|z) = N(c z + v, s^2 I),
// prior p(z) = N(0, I). Latent and data dimensions are equal.
struct AffineVae {
  double a = 1.0;
  Vec b;
  double t = 1.0;
  double c = 1.0;
  Vec v;
  double s = 1.0;

  static AffineVae identity(Eigen::Index d);
  Eigen::Index dim() const { return b.size(); }

  // Flat order: a, b[0..d), t, c, v[0..d), s.
  Vec pack() const;
  static AffineVae unpack(const Vec& flat, Eigen::Index d);
};

// Data law N(mean, stddev^2 I).
struct IsotropicGaussian {
  Vec mean;
  double stddev = 1.0;

  Mat sample(std::size_t n, Rng& rng) const;
  double log_pdf(const Vec& x) const;
};

// The ELBO-optimal parameters when the encoder/decoder means are the exact
// standardization pair: a = 1/sigma, b = -mu/sigma, t = 1, c = sigma,
// v = mu, s = sigma.
AffineVae standardizing_optimum(const IsotropicGaussian& data);

struct ElboBreakdown {
  double reconstruction = 0.0;
  double prior_matching = 0.0;
  double total() const { return reconstruction - prior_matching; }
};

// mu + std * eps with eps ~ N(0, I).
Vec reparam_sample(const Vec& mu, double std, Rng& rng);

// Monte Carlo ELBO with M reparameterized latent draws.
ElboBreakdown elbo(const AffineVae& vae, const Vec& x, std::size_t M, Rng& rng);
// Same, with the standard-normal draws supplied (one row per draw).
ElboBreakdown elbo(const AffineVae& vae, const Vec& x, const Mat& eps);
// Gradient of elbo(vae, x, eps).total() in AffineVae::pack() order.
Vec elbo_gradient(const AffineVae& vae, const Vec& x, const Mat& eps);

// log p_theta(x) = log N(x | v, (c^2 + s^2) I), the evidence the ELBO bounds.
double model_log_evidence(const AffineVae& vae, const Vec& x);

enum class VaeObjective {
  // Every parameter ascends the mean ELBO.
  kJointElbo,
  // Means fit the standardizing encoder/decoder pair (latent moments matched
  // to the prior, decoder reconstructs the encoder mean); t ascends the prior
  // matching term and s the reconstruction term.
  kTermwise,
};

struct VaeTrainConfig {
  std::size_t steps = 4000;
  std::size_t batch = 128;
  std::size_t mc_samples = 8;
  double learning_rate = 1e-2;
  // Learning rate decays linearly to learning_rate * final_lr_fraction.
  double final_lr_fraction = 0.02;
  VaeObjective objective = VaeObjective::kTermwise;
};

struct VaeTrainResult {
  AffineVae vae;
  std::vector<double> mean_elbo;  // per step, on the minibatch
};

VaeTrainResult train_affine_vae(const Mat& data, const AffineVae& init,
                                const VaeTrainConfig& config, Rng& rng);

// Mlp encoder/decoder variant with unit decoder variance. The encoder maps x
// to (latent mean, pre-softplus latent std); the decoder maps z to the mean.
struct MlpVae {
  Mlp encoder;
  Mlp decoder;
  Eigen::Index latent_dim;

  static MlpVae random(Eigen::Index data_dim, Eigen::Index latent_dim,
                       std::vector<Eigen::Index> hidden, Rng& rng);
};

// Mean ELBO over a batch and its parameter gradient [encoder; decoder].
struct MlpVaeElbo {
  double mean_elbo = 0.0;
  Vec grad;
};
MlpVaeElbo mlp_vae_elbo(const MlpVae& vae, const Mat& x, const Mat& eps);

std::vector<double> train_mlp_vae(MlpVae& vae, const Mat& data, std::size_t steps,
                                  std::size_t batch, double learning_rate, Rng& rng);

}  // namespace difflab

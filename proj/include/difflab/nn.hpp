#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "difflab/rng.hpp"
#include "difflab/types.hpp"

namespace difflab {

struct MlpShape {
  Eigen::Index data_dim = 1;
  std::vector<Eigen::Index> hidden;
  Eigen::Index output_dim = 1;
  // When set, a conditioning scalar (normalized time or noise level) is
  // appended to the input.
  bool conditioned = true;

  Eigen::Index input_dim() const { return data_dim + (conditioned ? 1 : 0); }
};

// Activations kept by a forward pass for the matching backward pass.
struct MlpTape {
  std::vector<Mat> activations;  // activations[0] is the (augmented) input
};

// Fully connected network, tanh on hidden layers, linear output layer.
// Flat parameter order: for each layer, W row-major then b.
class Mlp {
 public:
  explicit Mlp(MlpShape shape);

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  static Mlp random(MlpShape shape, Rng& rng);

  const MlpShape& shape() const { return shape_; }
  std::size_t layers() const { return weights_.size(); }

  Vec forward(const Vec& x, double cond = 0.0) const;
  Mat forward(const Mat& x, double cond) const;
  Mat forward(const Mat& x, const Vec& cond) const;

  Mat forward(const Mat& x, const Vec& cond, MlpTape& tape) const;

  struct Grads {
    Vec params;
    Mat input;  // dL/dx for the data columns only
  };
  // grad_out is dL/dY for the batch recorded in tape.
  Grads backward(const MlpTape& tape, const Mat& grad_out) const;

  Eigen::Index num_parameters() const;
  Vec parameters() const;
  void set_parameters(const Vec& flat);

  Eigen::MatrixXd& weight(std::size_t l) { return weights_[l]; }
  const Eigen::MatrixXd& weight(std::size_t l) const { return weights_[l]; }
  Vec& bias(std::size_t l) { return biases_[l]; }
  const Vec& bias(std::size_t l) const { return biases_[l]; }

 private:
  Mat augment(const Mat& x, const Vec& cond) const;

  MlpShape shape_;
  std::vector<Eigen::MatrixXd> weights_;  // out x in
  std::vector<Vec> biases_;
};

// loss(output, grad_output) returns the loss and writes dL/doutput.
using OutputLoss = std::function<double(const Vec& output, Vec& grad_output)>;

struct LossAndGrad {
  double loss = 0.0;
  Vec grad;
};

// Reverse-mode gradient of a scalar loss of one forward pass.
LossAndGrad mlp_gradient(const Mlp& net, const OutputLoss& loss, const Vec& x,
                         double cond);

// Central finite-difference gradient, used as the independent check.
Vec finite_difference_gradient(const Mlp& net, const OutputLoss& loss, const Vec& x,
                               double cond, double step);

double gradient_relative_error(const Vec& a, const Vec& b);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(AdamConfig config, Eigen::Index num_params);

  // Descent step on params given the gradient of the objective to minimize.
  void step(Vec& params, const Vec& grad);

  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  std::size_t steps_taken() const { return t_; }
  const Vec& first_moment() const { return m_; }
  const Vec& second_moment() const { return v_; }

 private:
  AdamConfig config_;
  Vec m_, v_;
  std::size_t t_ = 0;
};

// Draws a fresh minibatch, returns its loss and writes the parameter gradient.
using LossSampler = std::function<double(const Mlp& net, Vec& grad, Rng& rng)>;

struct FitResult {
  std::vector<double> losses;
};

// Minimizes the sampled loss with Adam for the given number of steps, the
// learning rate decaying linearly to final_lr_fraction of its initial value.
// Throws NumericError if a loss or gradient goes non-finite.
FitResult fit(Mlp& net, const LossSampler& sampler, std::size_t steps, Adam& opt,
              Rng& rng, double final_lr_fraction = 1.0);

std::vector<double> moving_average(const std::vector<double>& xs, std::size_t window);

// layer,row,col,value with the bias stored as column `in` of [W | b].
void save_mlp_csv(const std::filesystem::path& path, const Mlp& net);
Mlp load_mlp_csv(const std::filesystem::path& path, bool conditioned);

}  // namespace difflab

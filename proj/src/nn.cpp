#include "difflab/nn.hpp"

#include <cmath>
#include <map>

#include "difflab/csv.hpp"
#include "difflab/error.hpp"

namespace difflab {

Mlp::Mlp(MlpShape shape) : shape_(std::move(shape)) {
  require(shape_.data_dim >= 1 && shape_.output_dim >= 1, "Mlp: dimensions must be >= 1");
  Eigen::Index fan_in = shape_.input_dim();
  std::vector<Eigen::Index> widths = shape_.hidden;
  widths.push_back(shape_.output_dim);
  for (Eigen::Index w : widths) {
    require(w >= 1, "Mlp: layer width must be >= 1");
    weights_.push_back(Eigen::MatrixXd::Zero(w, fan_in));
    biases_.push_back(Vec::Zero(w));
    fan_in = w;
  }
}

Mlp Mlp::random(MlpShape shape, Rng& rng) {
  Mlp net(std::move(shape));
  for (std::size_t l = 0; l < net.layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(net.weights_[l].cols()));
    for (Eigen::Index r = 0; r < net.weights_[l].rows(); ++r)
      for (Eigen::Index c = 0; c < net.weights_[l].cols(); ++c)
        net.weights_[l](r, c) = rng.uniform(-bound, bound);
    for (Eigen::Index r = 0; r < net.biases_[l].size(); ++r)
      net.biases_[l][r] = rng.uniform(-bound, bound);
  }
  return net;
}

Mat Mlp::augment(const Mat& x, const Vec& cond) const {
  require(x.cols() == shape_.data_dim, "Mlp: input dimension mismatch");
  if (!shape_.conditioned) return x;
  require(cond.size() == x.rows(), "Mlp: one conditioning value per row required");
  Mat a(x.rows(), shape_.input_dim());
  a.leftCols(shape_.data_dim) = x;
  a.col(shape_.data_dim) = cond;
  return a;
}

Mat Mlp::forward(const Mat& x, const Vec& cond, MlpTape& tape) const {
  tape.activations.clear();
  tape.activations.push_back(augment(x, cond));
  for (std::size_t l = 0; l < layers(); ++l) {
    Mat z = tape.activations.back() * weights_[l].transpose();
    z.rowwise() += biases_[l].transpose();
    if (l + 1 < layers()) z = z.array().tanh().matrix();
    tape.activations.push_back(std::move(z));
  }
  return tape.activations.back();
}

Mat Mlp::forward(const Mat& x, const Vec& cond) const {
  Mat a = augment(x, cond);
  for (std::size_t l = 0; l < layers(); ++l) {
    Mat z = a * weights_[l].transpose();
    z.rowwise() += biases_[l].transpose();
    if (l + 1 < layers()) z = z.array().tanh().matrix();
    a = std::move(z);
  }
  return a;
}

Mat Mlp::forward(const Mat& x, double cond) const {
  return forward(x, Vec::Constant(x.rows(), cond));
}

Vec Mlp::forward(const Vec& x, double cond) const {
  Mat row = x.transpose();
  return forward(row, Vec::Constant(1, cond)).row(0).transpose();
}

Mlp::Grads Mlp::backward(const MlpTape& tape, const Mat& grad_out) const {
  require(tape.activations.size() == layers() + 1, "Mlp::backward: tape does not match");
  require(grad_out.rows() == tape.activations.back().rows() &&
              grad_out.cols() == shape_.output_dim,
          "Mlp::backward: gradient shape mismatch");
  std::vector<Eigen::MatrixXd> gw(layers());
  std::vector<Vec> gb(layers());
  Mat delta = grad_out;
  for (std::size_t l = layers(); l-- > 0;) {
    const Mat& input = tape.activations[l];
    gw[l] = delta.transpose() * input;
    gb[l] = delta.colwise().sum().transpose();
    Mat back = delta * weights_[l];
    if (l > 0) back.array() *= 1.0 - input.array().square();
    delta = std::move(back);
  }
  Grads g;
  g.params.resize(num_parameters());
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l < layers(); ++l) {
    for (Eigen::Index r = 0; r < gw[l].rows(); ++r)
      for (Eigen::Index c = 0; c < gw[l].cols(); ++c) g.params[pos++] = gw[l](r, c);
    for (Eigen::Index r = 0; r < gb[l].size(); ++r) g.params[pos++] = gb[l][r];
  }
  g.input = delta.leftCols(shape_.data_dim);
  return g;
}

Eigen::Index Mlp::num_parameters() const {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < layers(); ++l) n += weights_[l].size() + biases_[l].size();
  return n;
}

Vec Mlp::parameters() const {
  Vec flat(num_parameters());
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l < layers(); ++l) {
    for (Eigen::Index r = 0; r < weights_[l].rows(); ++r)
      for (Eigen::Index c = 0; c < weights_[l].cols(); ++c) flat[pos++] = weights_[l](r, c);
    for (Eigen::Index r = 0; r < biases_[l].size(); ++r) flat[pos++] = biases_[l][r];
  }
  return flat;
}

void Mlp::set_parameters(const Vec& flat) {
  require(flat.size() == num_parameters(), "Mlp::set_parameters: size mismatch");
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l < layers(); ++l) {
    for (Eigen::Index r = 0; r < weights_[l].rows(); ++r)
      for (Eigen::Index c = 0; c < weights_[l].cols(); ++c) weights_[l](r, c) = flat[pos++];
    for (Eigen::Index r = 0; r < biases_[l].size(); ++r) biases_[l][r] = flat[pos++];
  }
}

LossAndGrad mlp_gradient(const Mlp& net, const OutputLoss& loss, const Vec& x,
                         double cond) {
  MlpTape tape;
  const Mat out = net.forward(Mat(x.transpose()), Vec::Constant(1, cond), tape);
  Vec gout(out.cols());
  LossAndGrad res;
  res.loss = loss(out.row(0).transpose(), gout);
  res.grad = net.backward(tape, Mat(gout.transpose())).params;
  return res;
}

Vec finite_difference_gradient(const Mlp& net, const OutputLoss& loss, const Vec& x,
                               double cond, double step) {
  Mlp probe = net;
  Vec theta = net.parameters();
  Vec grad(theta.size());
  Vec scratch(net.shape().output_dim);
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double saved = theta[i];
    theta[i] = saved + step;
    probe.set_parameters(theta);
    const double up = loss(probe.forward(x, cond), scratch);
    theta[i] = saved - step;
    probe.set_parameters(theta);
    const double down = loss(probe.forward(x, cond), scratch);
    theta[i] = saved;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

double gradient_relative_error(const Vec& a, const Vec& b) {
  const double denom = std::max(a.norm() + b.norm(), 1e-300);
  return (a - b).norm() / denom;
}

Adam::Adam(AdamConfig config, Eigen::Index num_params)
    : config_(config), m_(Vec::Zero(num_params)), v_(Vec::Zero(num_params)) {
  require(config_.learning_rate >= 0.0, "Adam: learning rate must be >= 0");
}

void Adam::step(Vec& params, const Vec& grad) {
  require(params.size() == m_.size() && grad.size() == m_.size(), "Adam: size mismatch");
  ++t_;
  m_ = config_.beta1 * m_ + (1.0 - config_.beta1) * grad;
  v_ = config_.beta2 * v_ + (1.0 - config_.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  params.array() -= config_.learning_rate * (m_.array() / c1) /
                    ((v_.array() / c2).sqrt() + config_.epsilon);
}

FitResult fit(Mlp& net, const LossSampler& sampler, std::size_t steps, Adam& opt,
              Rng& rng, double final_lr_fraction) {
  require(final_lr_fraction >= 0.0, "fit: final_lr_fraction must be >= 0");
  const double lr0 = opt.config().learning_rate;
  FitResult res;
  res.losses.reserve(steps);
  Vec theta = net.parameters();
  Vec grad(theta.size());
  for (std::size_t s = 0; s < steps; ++s) {
    const double loss = sampler(net, grad, rng);
    if (!std::isfinite(loss) || !grad.allFinite()) throw NumericError("fit", s);
    const double frac = static_cast<double>(s) / static_cast<double>(steps);
    opt.set_learning_rate(lr0 * (1.0 - frac * (1.0 - final_lr_fraction)));
    opt.step(theta, grad);
    net.set_parameters(theta);
    res.losses.push_back(loss);
  }
  opt.set_learning_rate(lr0);
  return res;
}

std::vector<double> moving_average(const std::vector<double>& xs, std::size_t window) {
  require(window >= 1, "moving_average: window must be >= 1");
  std::vector<double> out;
  if (xs.size() < window) return out;
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    acc += xs[i];
    if (i >= window) acc -= xs[i - window];
    if (i + 1 >= window) out.push_back(acc / static_cast<double>(window));
  }
  return out;
}

void save_mlp_csv(const std::filesystem::path& path, const Mlp& net) {
  CsvWriter w(path, {"layer", "row", "col", "value"});
  for (std::size_t l = 0; l < net.layers(); ++l) {
    const auto& W = net.weight(l);
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      for (Eigen::Index c = 0; c < W.cols(); ++c)
        w.row({static_cast<double>(l), static_cast<double>(r), static_cast<double>(c), W(r, c)});
      w.row({static_cast<double>(l), static_cast<double>(r),
             static_cast<double>(W.cols()), net.bias(l)[r]});
    }
  }
}

Mlp load_mlp_csv(const std::filesystem::path& path, bool conditioned) {
  const CsvTable t = read_csv(path);
  const std::size_t cl = t.column("layer"), cr = t.column("row"), cc = t.column("col"),
                    cv = t.column("value");
  // Shapes first: rows and augmented columns per layer.
  std::map<std::size_t, std::pair<Eigen::Index, Eigen::Index>> dims;
  for (const auto& row : t.rows) {
    auto& d = dims[static_cast<std::size_t>(row[cl])];
    d.first = std::max(d.first, static_cast<Eigen::Index>(row[cr]) + 1);
    d.second = std::max(d.second, static_cast<Eigen::Index>(row[cc]) + 1);
  }
  require(!dims.empty(), "load_mlp_csv: no parameters");
  MlpShape shape;
  shape.conditioned = conditioned;
  const Eigen::Index in = dims.begin()->second.second - 1;
  shape.data_dim = in - (conditioned ? 1 : 0);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) shape.hidden.push_back(dims.at(l).first);
  shape.output_dim = dims.rbegin()->second.first;
  Mlp net(shape);
  for (std::size_t l = 0; l < net.layers(); ++l)
    require(net.weight(l).rows() == dims.at(l).first &&
                net.weight(l).cols() + 1 == dims.at(l).second,
            "load_mlp_csv: inconsistent layer shapes");
  for (const auto& row : t.rows) {
    const auto l = static_cast<std::size_t>(row[cl]);
    const auto r = static_cast<Eigen::Index>(row[cr]);
    const auto c = static_cast<Eigen::Index>(row[cc]);
    if (c == net.weight(l).cols())
      net.bias(l)[r] = row[cv];
    else
      net.weight(l)(r, c) = row[cv];
  }
  return net;
}

}  // namespace difflab

#include "roiadapt/mlp.hpp"

#include <cmath>

#include "roiadapt/error.hpp"

namespace roiadapt::sac {

std::string to_string(Activation a) { return a == Activation::kRelu ? "relu" : "tanh"; }

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  throw DomainError("unknown activation '" + s + "'");
}

Mlp::Mlp(std::vector<int> sizes, Activation hidden, std::mt19937_64& rng)
    : sizes_(std::move(sizes)), activation_(hidden) {
  index_layers();
  params_.resize(offsets_.back());
  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const Eigen::Index n = static_cast<Eigen::Index>(sizes_[l + 1]) * (sizes_[l] + 1);
    for (Eigen::Index i = 0; i < n; ++i) params_(offsets_[l] + i) = dist(rng);
  }
}

Mlp::Mlp(std::vector<int> sizes, Activation hidden, Eigen::VectorXd params)
    : sizes_(std::move(sizes)), activation_(hidden), params_(std::move(params)) {
  index_layers();
  if (params_.size() != offsets_.back()) throw DomainError("parameter vector does not match layer sizes");
}

void Mlp::index_layers() {
  if (sizes_.size() < 2) throw DomainError("an MLP needs at least input and output sizes");
  for (int s : sizes_)
    if (s <= 0) throw DomainError("layer sizes must be positive");
  offsets_.assign(1, 0);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l)
    offsets_.push_back(offsets_.back() + static_cast<Eigen::Index>(sizes_[l + 1]) * (sizes_[l] + 1));
}

Eigen::Map<const Eigen::MatrixXd> Mlp::weight(std::size_t l) const {
  return {params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]};
}

Eigen::Map<const Eigen::VectorXd> Mlp::bias(std::size_t l) const {
  return {params_.data() + offsets_[l] + static_cast<Eigen::Index>(sizes_[l + 1]) * sizes_[l], sizes_[l + 1]};
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  Tape tape;
  return forward(x, tape);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Tape& tape) const {
  if (x.rows() != input_dim()) throw DomainError("MLP input has wrong dimension");
  const std::size_t layers = sizes_.size() - 1;
  tape.activations.resize(layers + 1);
  tape.activations[0] = x;
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = weight(l) * tape.activations[l];
    z.colwise() += bias(l);
    if (l + 1 < layers) {
      if (activation_ == Activation::kRelu)
        z = z.cwiseMax(0.0);
      else
        z = z.array().tanh().matrix();
    }
    tape.activations[l + 1] = std::move(z);
  }
  return tape.activations.back();
}

Eigen::MatrixXd Mlp::backward(const Tape& tape, const Eigen::MatrixXd& grad_output, Eigen::VectorXd& grad) const {
  if (grad.size() == 0) grad = Eigen::VectorXd::Zero(params_.size());
  const std::size_t layers = sizes_.size() - 1;
  Eigen::MatrixXd delta = grad_output;
  for (std::size_t l = layers; l-- > 0;) {
    const Eigen::MatrixXd& input = tape.activations[l];
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + offsets_[l], sizes_[l + 1], sizes_[l]);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + offsets_[l] + static_cast<Eigen::Index>(sizes_[l + 1]) * sizes_[l],
                                   sizes_[l + 1]);
    gw.noalias() += delta * input.transpose();
    gb += delta.rowwise().sum();
    Eigen::MatrixXd back = weight(l).transpose() * delta;
    if (l > 0) {
      if (activation_ == Activation::kRelu)
        back = back.cwiseProduct((input.array() > 0.0).cast<double>().matrix());
      else
        back = back.cwiseProduct((1.0 - input.array().square()).matrix());
    }
    delta = std::move(back);
  }
  return delta;
}

Adam::Adam(Eigen::Index n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(Eigen::VectorXd::Zero(n)), v_(Eigen::VectorXd::Zero(n)) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

}  // namespace roiadapt::sac

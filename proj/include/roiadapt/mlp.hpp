#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

namespace roiadapt::sac {

enum class Activation { kRelu, kTanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

// Fully connected network with a linear output layer. All parameters live in
// one flat vector (per layer: weights column-major out x in, then biases) so
// optimizers, Polyak averaging and checkpoints treat them uniformly.
// Inputs are column-per-sample matrices.
class Mlp {
 public:
  struct Tape {
    std::vector<Eigen::MatrixXd> activations;  // [0] is the input
  };

  Mlp() = default;
  Mlp(std::vector<int> sizes, Activation hidden, std::mt19937_64& rng);
  Mlp(std::vector<int> sizes, Activation hidden, Eigen::VectorXd params);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }
  Activation activation() const { return activation_; }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }
  Eigen::Index param_count() const { return params_.size(); }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Tape& tape) const;

  // Backpropagates dL/d(output) through the recorded pass. Adds dL/dparams
  // into `grad` (resized and zeroed if empty) and returns dL/d(input).
  Eigen::MatrixXd backward(const Tape& tape, const Eigen::MatrixXd& grad_output, Eigen::VectorXd& grad) const;

 private:
  Eigen::Map<const Eigen::MatrixXd> weight(std::size_t layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const;
  void index_layers();

  std::vector<int> sizes_;
  Activation activation_ = Activation::kRelu;
  Eigen::VectorXd params_;
  std::vector<Eigen::Index> offsets_;
};

// Adam with bias correction.
class Adam {
 public:
  Adam() = default;
  Adam(Eigen::Index n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);
  double lr() const { return lr_; }

 private:
  double lr_ = 0.0;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long long t_ = 0;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
};

}  // namespace roiadapt::sac

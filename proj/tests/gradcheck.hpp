#pragma once

// Central-difference checks of the analytic SAC loss gradients, shared by the
// unit tests and the acceptance binary.

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "roiadapt/sac.hpp"

namespace roiadapt::gradcheck {

inline Eigen::VectorXd numeric_gradient(Eigen::VectorXd& params, const std::function<double()>& loss,
                                        double h = 1e-6) {
  Eigen::VectorXd g(params.size());
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double up = loss();
    params[i] = saved - h;
    const double down = loss();
    params[i] = saved;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-12});
  return (a - b).norm() / scale;
}

inline Eigen::MatrixXd uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

struct CheckResult {
  double value = 0.0;
  double q1 = 0.0;
  double q2 = 0.0;
  double policy = 0.0;
  double worst() const { return std::max({value, q1, q2, policy}); }
};

// Small networks (3 -> 8 -> 8 -> heads), a random batch, and the four losses
// the agent differentiates.
inline CheckResult check_seed(std::uint64_t seed) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  std::mt19937_64 rng(seed);
  const int obs = 3, act = 2, n = 6;
  const double alpha = 0.2, lsmin = -20, lsmax = 2;
  sac::Mlp value({obs, 8, 8, 1}, sac::Activation::kRelu, rng);
  sac::Mlp target({obs, 8, 8, 1}, sac::Activation::kRelu, rng);
  sac::Mlp q1({obs + act, 8, 8, 1}, sac::Activation::kRelu, rng);
  sac::Mlp q2({obs + act, 8, 8, 1}, sac::Activation::kRelu, rng);
  sac::Mlp policy({obs, 8, 8, 2 * act}, sac::Activation::kRelu, rng);

  sac::Batch batch;
  batch.s = uniform(obs, n, rng);
  batch.a = uniform(act, n, rng, 0.9);
  batch.r = uniform(n, 1, rng);
  batch.s_next = uniform(obs, n, rng);
  batch.done = VectorXd::Zero(n);
  batch.done[1] = 1.0;
  const MatrixXd noise = sac::gaussian_noise(act, n, rng);
  const VectorXd targets = uniform(n, 1, rng);

  CheckResult out;
  {
    const auto lg = sac::value_loss(value, batch.s, targets);
    const auto fd = numeric_gradient(value.params(), [&] { return sac::value_loss(value, batch.s, targets).loss; });
    out.value = relative_error(lg.grad, fd);
  }
  for (auto* q : {&q1, &q2}) {
    const auto lg = sac::q_loss(*q, target, batch, 0.99);
    const auto fd = numeric_gradient(q->params(), [&] { return sac::q_loss(*q, target, batch, 0.99).loss; });
    (q == &q1 ? out.q1 : out.q2) = relative_error(lg.grad, fd);
  }
  {
    const auto lg = sac::policy_loss(policy, q1, q2, batch.s, noise, alpha, lsmin, lsmax);
    const auto fd = numeric_gradient(policy.params(), [&] {
      return sac::policy_loss(policy, q1, q2, batch.s, noise, alpha, lsmin, lsmax).loss;
    });
    out.policy = relative_error(lg.grad, fd);
  }
  return out;
}

}  // namespace roiadapt::gradcheck

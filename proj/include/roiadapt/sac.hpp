#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roiadapt/environment.hpp"
#include "roiadapt/mlp.hpp"
#include "roiadapt/replay.hpp"

namespace roiadapt::sac {

struct SacHyperParams {
  double lr_v = 0.002;
  double lr_q = 0.002;
  double lr_pi = 0.002;
  double discount = 0.99;
  double tau = 0.005;
  double alpha = 0.2;
  std::size_t batch = 256;
  std::size_t buffer_capacity = 100000;
  std::vector<int> hidden = {64, 64};
  double log_std_min = -20.0;
  double log_std_max = 2.0;
  std::size_t warmup_steps = 1000;
  std::size_t gradient_steps = 1;  // per environment step after warmup
  std::size_t total_steps = 20000;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const SacHyperParams& hp);
SacHyperParams hyperparams_from_json(const nlohmann::json& j);

// Tanh-squashed Gaussian policy evaluated on a column batch of states.
struct PolicySample {
  Eigen::MatrixXd action;    // act_dim x n, in (-1, 1)
  Eigen::VectorXd log_prob;  // includes the tanh change-of-variables term
  Eigen::MatrixXd mean;
  Eigen::MatrixXd log_std;   // after clamping
  Eigen::MatrixXd pre_tanh;
  Eigen::MatrixXd noise;
  Eigen::MatrixXd clamped;   // 1 where log_std hit a bound
};

// The policy network emits [mean; log_std]. Deterministic mode returns
// tanh(mean) with the log-density evaluated at zero noise.
PolicySample sample_action(const Mlp& policy, const Eigen::MatrixXd& states, const Eigen::MatrixXd& noise,
                           bool deterministic, double log_std_min, double log_std_max, Mlp::Tape* tape = nullptr);

// min(Q1, Q2)(s, a) - alpha * log pi(a|s) with a ~ pi(.|s) driven by `noise`.
Eigen::VectorXd soft_value_target(const Mlp& q1, const Mlp& q2, const Mlp& policy, const Eigen::MatrixXd& states,
                                  const Eigen::MatrixXd& noise, double alpha, double log_std_min, double log_std_max);

struct LossGrad {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

// 1/2 mean (V(s) - target)^2.
LossGrad value_loss(const Mlp& value, const Eigen::MatrixXd& states, const Eigen::VectorXd& targets);
// 1/2 mean (Q(s,a) - y)^2, y = r + discount * (1 - done) * V_target(s').
LossGrad q_loss(const Mlp& q, const Mlp& target_value, const Batch& batch, double discount);
// mean(alpha * log pi(a|s) - min(Q1,Q2)(s,a)), a reparameterized by `noise`.
LossGrad policy_loss(const Mlp& policy, const Mlp& q1, const Mlp& q2, const Eigen::MatrixXd& states,
                     const Eigen::MatrixXd& noise, double alpha, double log_std_min, double log_std_max);

double update_value(Mlp& value, Adam& opt, const Eigen::MatrixXd& states, const Eigen::VectorXd& targets);
double update_q(Mlp& q, Adam& opt, const Mlp& target_value, const Batch& batch, double discount);
double update_policy(Mlp& policy, Adam& opt, const Mlp& q1, const Mlp& q2, const Eigen::MatrixXd& states,
                     const Eigen::MatrixXd& noise, double alpha, double log_std_min, double log_std_max);

// target <- tau * online + (1 - tau) * target
void soft_update_target(Mlp& target, const Mlp& online, double tau);

Eigen::MatrixXd gaussian_noise(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

struct StepLosses {
  double value = 0.0;
  double q1 = 0.0;
  double q2 = 0.0;
  double policy = 0.0;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, std::string batch_dump)
      : std::runtime_error(what), dump(std::move(batch_dump)) {}
  std::string dump;  // CSV of the offending batch
};

// Policy, twin soft-Q, value, and Polyak-averaged target value networks.
class SacAgent {
 public:
  SacAgent(int obs_dim, int act_dim, const SacHyperParams& hp);

  // One pass of value, Q1, Q2, policy updates then the target soft update.
  // Throws TrainingError if any loss is non-finite.
  StepLosses gradient_step(const Batch& batch);
  std::vector<double> act(const std::vector<double>& obs, bool deterministic);

  const SacHyperParams& hyperparams() const { return hp_; }
  std::mt19937_64& rng() { return rng_; }

  Mlp policy, q1, q2, value, value_target;

 private:
  SacHyperParams hp_;
  int act_dim_;
  std::mt19937_64 rng_;
  Adam opt_policy_, opt_q1_, opt_q2_, opt_value_;
};

struct CurvePoint {
  std::size_t step = 0;  // environment steps completed
  std::size_t episode = 0;
  double reward = 0.0;        // greedy evaluation return (training return if no eval env)
  double train_reward = 0.0;  // return collected by the stochastic behaviour policy
};

struct TrainResult {
  SacAgent agent;
  std::vector<CurvePoint> curve;
};

// Deterministic-policy return over one episode of `env`.
double evaluate_episode(const Mlp& policy, rl::Environment& env, double log_std_min, double log_std_max);

// Interleaves environment steps and gradient steps. Uniform random actions
// for the first warmup_steps, then one gradient pass per environment step.
// After every episode the greedy policy is scored on `eval_env` if given.
TrainResult train(rl::Environment& env, rl::Environment* eval_env, const SacHyperParams& hp,
                  const std::function<void(const CurvePoint&)>& on_episode = {});

// Moving average over `window` points (shorter at the start).
std::vector<double> smooth(const std::vector<double>& v, std::size_t window);

std::string format_curve(const std::vector<CurvePoint>& curve, const std::string& comment = {});
std::vector<CurvePoint> parse_curve(const std::string& text, const std::string& source = "<curve>");

// Deployable policy: network plus what is needed to rebuild its inputs.
struct TrainedPolicy {
  Mlp network;
  SacHyperParams hp;
  nlohmann::json env_bounds;  // normalization bounds the observations used
  std::uint64_t seed = 0;

  std::vector<double> act(const std::vector<double>& obs) const;
};

nlohmann::json checkpoint_json(const TrainedPolicy& p, const nlohmann::json& extra = {});
TrainedPolicy policy_from_checkpoint(const nlohmann::json& j);
void save_checkpoint(const std::string& path, const TrainedPolicy& p, const nlohmann::json& extra = {});
TrainedPolicy load_checkpoint(const std::string& path);

}  // namespace roiadapt::sac

#include "roiadapt/sac.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "roiadapt/error.hpp"
#include "roiadapt/textio.hpp"

namespace roiadapt::sac {
namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

Eigen::MatrixXd stack(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  Eigen::MatrixXd out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

LossGrad squared_residual(const Mlp& net, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets) {
  Mlp::Tape tape;
  const Eigen::RowVectorXd pred = net.forward(inputs, tape).row(0);
  const Eigen::RowVectorXd diff = pred - targets.transpose();
  const double n = static_cast<double>(diff.size());
  LossGrad out;
  out.loss = 0.5 * diff.squaredNorm() / n;
  net.backward(tape, diff / n, out.grad);
  return out;
}

std::string dump_batch(const Batch& b) {
  std::ostringstream os;
  os.precision(17);
  os << "index,s,a,r,s_next,done\n";
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    auto vec = [&](const Eigen::MatrixXd& m) {
      std::string s;
      for (Eigen::Index i = 0; i < m.rows(); ++i) s += (i ? " " : "") + textio::format_double(m(i, j));
      return s;
    };
    os << b.indices[static_cast<std::size_t>(j)] << ',' << vec(b.s) << ',' << vec(b.a) << ','
       << textio::format_double(b.r(j)) << ',' << vec(b.s_next) << ',' << b.done(j) << '\n';
  }
  return os.str();
}

}  // namespace

void SacHyperParams::validate() const {
  if (!(discount > 0.0 && discount <= 1.0)) throw DomainError("discount must lie in (0, 1]");
  if (!(tau > 0.0 && tau <= 1.0)) throw DomainError("tau must lie in (0, 1]");
  if (!(alpha >= 0.0)) throw DomainError("alpha must be non-negative");
  if (!(lr_v > 0.0 && lr_q > 0.0 && lr_pi > 0.0)) throw DomainError("learning rates must be positive");
  if (batch == 0 || buffer_capacity == 0) throw DomainError("batch and buffer capacity must be positive");
  if (!(log_std_min < log_std_max)) throw DomainError("log_std bounds are inverted");
  if (hidden.empty()) throw DomainError("at least one hidden layer is required");
}

nlohmann::json to_json(const SacHyperParams& hp) {
  return {{"lr_v", hp.lr_v},
          {"lr_q", hp.lr_q},
          {"lr_pi", hp.lr_pi},
          {"discount", hp.discount},
          {"tau", hp.tau},
          {"alpha", hp.alpha},
          {"batch", hp.batch},
          {"buffer_capacity", hp.buffer_capacity},
          {"hidden", hp.hidden},
          {"log_std_min", hp.log_std_min},
          {"log_std_max", hp.log_std_max},
          {"warmup_steps", hp.warmup_steps},
          {"gradient_steps", hp.gradient_steps},
          {"total_steps", hp.total_steps},
          {"seed", hp.seed}};
}

SacHyperParams hyperparams_from_json(const nlohmann::json& j) {
  SacHyperParams hp;
  hp.lr_v = j.value("lr_v", hp.lr_v);
  hp.lr_q = j.value("lr_q", hp.lr_q);
  hp.lr_pi = j.value("lr_pi", hp.lr_pi);
  hp.discount = j.value("discount", hp.discount);
  hp.tau = j.value("tau", hp.tau);
  hp.alpha = j.value("alpha", hp.alpha);
  hp.batch = j.value("batch", hp.batch);
  hp.buffer_capacity = j.value("buffer_capacity", hp.buffer_capacity);
  hp.hidden = j.value("hidden", hp.hidden);
  hp.log_std_min = j.value("log_std_min", hp.log_std_min);
  hp.log_std_max = j.value("log_std_max", hp.log_std_max);
  hp.warmup_steps = j.value("warmup_steps", hp.warmup_steps);
  hp.gradient_steps = j.value("gradient_steps", hp.gradient_steps);
  hp.total_steps = j.value("total_steps", hp.total_steps);
  hp.seed = j.value("seed", hp.seed);
  hp.validate();
  return hp;
}

Eigen::MatrixXd gaussian_noise(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = n01(rng);
  return m;
}

PolicySample sample_action(const Mlp& policy, const Eigen::MatrixXd& states, const Eigen::MatrixXd& noise,
                           bool deterministic, double log_std_min, double log_std_max, Mlp::Tape* tape) {
  Mlp::Tape local;
  const Eigen::MatrixXd out = policy.forward(states, tape ? *tape : local);
  const Eigen::Index k = out.rows() / 2;
  const Eigen::Index n = out.cols();
  PolicySample ps;
  ps.mean = out.topRows(k);
  const Eigen::MatrixXd raw = out.bottomRows(k);
  ps.log_std = raw.cwiseMax(log_std_min).cwiseMin(log_std_max);
  ps.clamped = ((raw.array() < log_std_min) || (raw.array() > log_std_max)).cast<double>().matrix();
  if (deterministic) {
    ps.noise = Eigen::MatrixXd::Zero(k, n);
  } else {
    if (noise.rows() != k || noise.cols() != n) throw DomainError("policy noise has wrong shape");
    ps.noise = noise;
  }
  ps.pre_tanh = ps.mean + ps.log_std.array().exp().matrix().cwiseProduct(ps.noise);
  ps.action = ps.pre_tanh.array().tanh().matrix();
  ps.log_prob.resize(n);
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  for (Eigen::Index j = 0; j < n; ++j) {
    double lp = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      const double u = ps.pre_tanh(i, j);
      const double eps = ps.noise(i, j);
      // log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u))
      const double log_jac = 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u));
      lp += -0.5 * eps * eps - ps.log_std(i, j) - half_log_2pi - log_jac;
    }
    ps.log_prob(j) = lp;
  }
  return ps;
}

Eigen::VectorXd soft_value_target(const Mlp& q1, const Mlp& q2, const Mlp& policy, const Eigen::MatrixXd& states,
                                  const Eigen::MatrixXd& noise, double alpha, double log_std_min, double log_std_max) {
  const auto ps = sample_action(policy, states, noise, false, log_std_min, log_std_max);
  const Eigen::MatrixXd sa = stack(states, ps.action);
  const Eigen::RowVectorXd v1 = q1.forward(sa).row(0);
  const Eigen::RowVectorXd v2 = q2.forward(sa).row(0);
  return v1.cwiseMin(v2).transpose() - alpha * ps.log_prob;
}

LossGrad value_loss(const Mlp& value, const Eigen::MatrixXd& states, const Eigen::VectorXd& targets) {
  return squared_residual(value, states, targets);
}

LossGrad q_loss(const Mlp& q, const Mlp& target_value, const Batch& batch, double discount) {
  const Eigen::VectorXd next_v = target_value.forward(batch.s_next).row(0).transpose();
  const Eigen::VectorXd y =
      batch.r + discount * (Eigen::VectorXd::Ones(batch.size()) - batch.done).cwiseProduct(next_v);
  return squared_residual(q, stack(batch.s, batch.a), y);
}

LossGrad policy_loss(const Mlp& policy, const Mlp& q1, const Mlp& q2, const Eigen::MatrixXd& states,
                     const Eigen::MatrixXd& noise, double alpha, double log_std_min, double log_std_max) {
  Mlp::Tape tape;
  const auto ps = sample_action(policy, states, noise, false, log_std_min, log_std_max, &tape);
  const Eigen::Index k = ps.action.rows();
  const Eigen::Index n = ps.action.cols();
  const Eigen::MatrixXd sa = stack(states, ps.action);
  Mlp::Tape t1, t2;
  const Eigen::RowVectorXd v1 = q1.forward(sa, t1).row(0);
  const Eigen::RowVectorXd v2 = q2.forward(sa, t2).row(0);
  const Eigen::RowVectorXd use1 = (v1.array() <= v2.array()).cast<double>();
  const Eigen::RowVectorXd use2 = Eigen::RowVectorXd::Ones(n) - use1;
  const Eigen::RowVectorXd qmin = v1.cwiseMin(v2);

  LossGrad out;
  out.loss = (alpha * ps.log_prob.transpose() - qmin).sum() / static_cast<double>(n);

  Eigen::VectorXd unused1, unused2;
  const Eigen::MatrixXd din1 = q1.backward(t1, use1, unused1);
  const Eigen::MatrixXd din2 = q2.backward(t2, use2, unused2);
  const Eigen::MatrixXd dq_da = din1.bottomRows(k) + din2.bottomRows(k);

  const Eigen::ArrayXXd a = ps.action.array();
  const Eigen::ArrayXXd sigma_eps = ps.log_std.array().exp() * ps.noise.array();
  const double inv_n = 1.0 / static_cast<double>(n);
  const Eigen::ArrayXXd d_u = inv_n * (alpha * 2.0 * a - dq_da.array() * (1.0 - a.square()));
  const Eigen::ArrayXXd d_log_std = (inv_n * -alpha + d_u * sigma_eps) * (1.0 - ps.clamped.array());
  Eigen::MatrixXd grad_out(2 * k, n);
  grad_out.topRows(k) = d_u.matrix();
  grad_out.bottomRows(k) = d_log_std.matrix();
  policy.backward(tape, grad_out, out.grad);
  return out;
}

double update_value(Mlp& value, Adam& opt, const Eigen::MatrixXd& states, const Eigen::VectorXd& targets) {
  const auto lg = value_loss(value, states, targets);
  opt.step(value.params(), lg.grad);
  return lg.loss;
}

double update_q(Mlp& q, Adam& opt, const Mlp& target_value, const Batch& batch, double discount) {
  const auto lg = q_loss(q, target_value, batch, discount);
  opt.step(q.params(), lg.grad);
  return lg.loss;
}

double update_policy(Mlp& policy, Adam& opt, const Mlp& q1, const Mlp& q2, const Eigen::MatrixXd& states,
                     const Eigen::MatrixXd& noise, double alpha, double log_std_min, double log_std_max) {
  const auto lg = policy_loss(policy, q1, q2, states, noise, alpha, log_std_min, log_std_max);
  opt.step(policy.params(), lg.grad);
  return lg.loss;
}

void soft_update_target(Mlp& target, const Mlp& online, double tau) {
  if (target.param_count() != online.param_count()) throw DomainError("target and online networks differ in shape");
  target.params() = tau * online.params() + (1.0 - tau) * target.params();
}

SacAgent::SacAgent(int obs_dim, int act_dim, const SacHyperParams& hp) : hp_(hp), act_dim_(act_dim), rng_(hp.seed) {
  hp_.validate();
  auto sizes = [&](int in, int out) {
    std::vector<int> s{in};
    s.insert(s.end(), hp_.hidden.begin(), hp_.hidden.end());
    s.push_back(out);
    return s;
  };
  policy = Mlp(sizes(obs_dim, 2 * act_dim), Activation::kRelu, rng_);
  q1 = Mlp(sizes(obs_dim + act_dim, 1), Activation::kRelu, rng_);
  q2 = Mlp(sizes(obs_dim + act_dim, 1), Activation::kRelu, rng_);
  value = Mlp(sizes(obs_dim, 1), Activation::kRelu, rng_);
  value_target = value;
  opt_policy_ = Adam(policy.param_count(), hp_.lr_pi);
  opt_q1_ = Adam(q1.param_count(), hp_.lr_q);
  opt_q2_ = Adam(q2.param_count(), hp_.lr_q);
  opt_value_ = Adam(value.param_count(), hp_.lr_v);
}

StepLosses SacAgent::gradient_step(const Batch& batch) {
  StepLosses l;
  const Eigen::Index n = batch.size();
  const Eigen::VectorXd v_target = soft_value_target(q1, q2, policy, batch.s, gaussian_noise(act_dim_, n, rng_),
                                                     hp_.alpha, hp_.log_std_min, hp_.log_std_max);
  l.value = update_value(value, opt_value_, batch.s, v_target);
  l.q1 = update_q(q1, opt_q1_, value_target, batch, hp_.discount);
  l.q2 = update_q(q2, opt_q2_, value_target, batch, hp_.discount);
  l.policy = update_policy(policy, opt_policy_, q1, q2, batch.s, gaussian_noise(act_dim_, n, rng_), hp_.alpha,
                           hp_.log_std_min, hp_.log_std_max);
  soft_update_target(value_target, value, hp_.tau);
  if (!std::isfinite(l.value) || !std::isfinite(l.q1) || !std::isfinite(l.q2) || !std::isfinite(l.policy)) {
    std::ostringstream os;
    os << "non-finite loss (value=" << l.value << ", q1=" << l.q1 << ", q2=" << l.q2 << ", policy=" << l.policy << ")";
    throw TrainingError(os.str(), dump_batch(batch));
  }
  return l;
}

std::vector<double> SacAgent::act(const std::vector<double>& obs, bool deterministic) {
  const Eigen::MatrixXd s = Eigen::Map<const Eigen::VectorXd>(obs.data(), static_cast<Eigen::Index>(obs.size()));
  const Eigen::MatrixXd noise = deterministic ? Eigen::MatrixXd::Zero(act_dim_, 1) : gaussian_noise(act_dim_, 1, rng_);
  const auto ps = sample_action(policy, s, noise, deterministic, hp_.log_std_min, hp_.log_std_max);
  return {ps.action.data(), ps.action.data() + act_dim_};
}

double evaluate_episode(const Mlp& policy, rl::Environment& env, double log_std_min, double log_std_max) {
  auto obs = env.reset();
  double total = 0.0;
  const int k = env.action_dim();
  while (true) {
    const Eigen::MatrixXd s = Eigen::Map<const Eigen::VectorXd>(obs.data(), static_cast<Eigen::Index>(obs.size()));
    const auto ps = sample_action(policy, s, Eigen::MatrixXd(), true, log_std_min, log_std_max);
    const auto step = env.step({ps.action.data(), ps.action.data() + k});
    total += step.reward;
    if (step.terminal || step.truncated) break;
    obs = step.observation;
  }
  return total;
}

TrainResult train(rl::Environment& env, rl::Environment* eval_env, const SacHyperParams& hp,
                  const std::function<void(const CurvePoint&)>& on_episode) {
  hp.validate();
  const int obs_dim = env.observation_dim();
  const int act_dim = env.action_dim();
  SacAgent agent(obs_dim, act_dim, hp);
  ReplayBuffer buffer(hp.buffer_capacity, obs_dim, act_dim);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::vector<CurvePoint> curve;

  auto obs = env.reset();
  double episode_return = 0.0;
  std::size_t episode = 0;
  for (std::size_t step = 0; step < hp.total_steps; ++step) {
    std::vector<double> action(static_cast<std::size_t>(act_dim));
    if (step < hp.warmup_steps) {
      for (auto& a : action) a = uniform(agent.rng());
    } else {
      action = agent.act(obs, false);
    }
    const auto result = env.step(action);
    buffer.add({obs, action, result.reward, result.observation, result.terminal});
    episode_return += result.reward;
    obs = result.observation;

    if (step + 1 >= hp.warmup_steps && buffer.size() >= hp.batch) {
      for (std::size_t g = 0; g < hp.gradient_steps; ++g) agent.gradient_step(buffer.sample(hp.batch, agent.rng()));
    }

    if (result.terminal || result.truncated) {
      CurvePoint p;
      p.step = step + 1;
      p.episode = episode;
      p.train_reward = episode_return;
      p.reward = eval_env ? evaluate_episode(agent.policy, *eval_env, hp.log_std_min, hp.log_std_max) : episode_return;
      curve.push_back(p);
      if (on_episode) on_episode(p);
      ++episode;
      episode_return = 0.0;
      obs = env.reset();
    }
  }
  return {std::move(agent), std::move(curve)};
}

std::vector<double> smooth(const std::vector<double>& v, std::size_t window) {
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    sum += v[i];
    if (i >= window) sum -= v[i - window];
    out[i] = sum / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

std::string format_curve(const std::vector<CurvePoint>& curve, const std::string& comment) {
  std::ostringstream os;
  if (!comment.empty()) os << "# " << comment << '\n';
  os << "step,episode,reward\n";
  for (const auto& p : curve) os << p.step << ',' << p.episode << ',' << textio::format_double(p.reward) << '\n';
  return os.str();
}

std::vector<CurvePoint> parse_curve(const std::string& text, const std::string& source) {
  std::vector<CurvePoint> out;
  for (const auto& row : textio::parse_csv(text, {"step", "episode", "reward"}, source)) {
    CurvePoint p;
    p.step = static_cast<std::size_t>(textio::to_int64(row, 0));
    p.episode = static_cast<std::size_t>(textio::to_int64(row, 1));
    p.reward = textio::to_double(row, 2);
    out.push_back(p);
  }
  return out;
}

std::vector<double> TrainedPolicy::act(const std::vector<double>& obs) const {
  const Eigen::MatrixXd s = Eigen::Map<const Eigen::VectorXd>(obs.data(), static_cast<Eigen::Index>(obs.size()));
  const auto ps = sample_action(network, s, Eigen::MatrixXd(), true, hp.log_std_min, hp.log_std_max);
  return {ps.action.data(), ps.action.data() + ps.action.rows()};
}

nlohmann::json checkpoint_json(const TrainedPolicy& p, const nlohmann::json& extra) {
  nlohmann::json j;
  j["format"] = "roi-adapt-policy";
  j["version"] = 1;
  j["sizes"] = p.network.sizes();
  j["activation"] = to_string(p.network.activation());
  j["params"] = std::vector<double>(p.network.params().data(), p.network.params().data() + p.network.param_count());
  j["hyperparams"] = to_json(p.hp);
  j["bounds"] = p.env_bounds;
  j["seed"] = p.seed;
  if (!extra.is_null()) j["extra"] = extra;
  return j;
}

TrainedPolicy policy_from_checkpoint(const nlohmann::json& j) {
  try {
    if (j.at("format") != "roi-adapt-policy") throw ParseError("not a policy checkpoint");
    if (j.at("version") != 1) throw ParseError("unsupported checkpoint version");
    const auto params = j.at("params").get<std::vector<double>>();
    TrainedPolicy p;
    p.network = Mlp(j.at("sizes").get<std::vector<int>>(), activation_from_string(j.at("activation")),
                    Eigen::Map<const Eigen::VectorXd>(params.data(), static_cast<Eigen::Index>(params.size())));
    p.hp = hyperparams_from_json(j.at("hyperparams"));
    p.env_bounds = j.value("bounds", nlohmann::json());
    p.seed = j.value("seed", std::uint64_t{0});
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad checkpoint: ") + e.what());
  } catch (const DomainError& e) {
    throw ParseError(std::string("bad checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const TrainedPolicy& p, const nlohmann::json& extra) {
  textio::write_file(path, checkpoint_json(p, extra).dump() + "\n");
}

TrainedPolicy load_checkpoint(const std::string& path) {
  try {
    return policy_from_checkpoint(nlohmann::json::parse(textio::read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace roiadapt::sac

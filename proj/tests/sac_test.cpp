#include "roiadapt/sac.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "gradcheck.hpp"
#include "roiadapt/error.hpp"
#include "roiadapt/replay.hpp"
#include "roiadapt/toy_env.hpp"

namespace roiadapt::sac {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Linear 1 -> 2 network whose outputs are the constants (mean, log_std).
Mlp ConstantGaussian(double mean, double log_std) {
  VectorXd p(4);
  p << 0.0, 0.0, mean, log_std;
  return Mlp({1, 2}, Activation::kRelu, p);
}

TEST(MlpTest, ForwardMatchesHandComputation) {
  // 2 -> 2 (relu) -> 1; W1 = [[1, -1], [2, 0.5]], b1 = [0, -1], W2 = [3, -2], b2 = 0.5
  VectorXd p(9);
  p << 1, 2, -1, 0.5, 0, -1, 3, -2, 0.5;
  const Mlp net({2, 2, 1}, Activation::kRelu, p);
  MatrixXd x(2, 1);
  x << 1.0, 2.0;
  // hidden = relu([1 - 2, 2 + 1 - 1]) = [0, 2]; out = 3*0 - 2*2 + 0.5
  EXPECT_DOUBLE_EQ(net.forward(x)(0, 0), -3.5);
}

TEST(MlpTest, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  for (auto act : {Activation::kRelu, Activation::kTanh}) {
    Mlp net({4, 7, 5, 3}, act, rng);
    const MatrixXd x = gradcheck::uniform(4, 5, rng);
    const MatrixXd w = gradcheck::uniform(3, 5, rng);
    auto loss = [&] { return (net.forward(x).array() * w.array()).sum(); };
    Mlp::Tape tape;
    net.forward(x, tape);
    VectorXd grad;
    const MatrixXd dx = net.backward(tape, w, grad);
    EXPECT_LT(gradcheck::relative_error(grad, gradcheck::numeric_gradient(net.params(), loss)), 1e-6);
    // input gradient
    MatrixXd xx = x;
    VectorXd flat = Eigen::Map<VectorXd>(xx.data(), xx.size());
    const auto fd = gradcheck::numeric_gradient(flat, [&] {
      const MatrixXd xi = Eigen::Map<const MatrixXd>(flat.data(), 4, 5);
      return (net.forward(xi).array() * w.array()).sum();
    });
    EXPECT_LT(gradcheck::relative_error(Eigen::Map<const VectorXd>(dx.data(), dx.size()), fd), 1e-6);
  }
}

TEST(AdamTest, FirstStepIsSignedLearningRate) {
  Adam opt(3, 0.01);
  VectorXd p = VectorXd::Zero(3);
  VectorXd g(3);
  g << 2.0, -0.5, 0.0;
  opt.step(p, g);
  EXPECT_NEAR(p[0], -0.01 * 2.0 / (2.0 + 1e-8), 1e-15);
  EXPECT_NEAR(p[1], 0.01 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_EQ(p[2], 0.0);
}

TEST(PolicyTest, LogProbMatchesClosedForm) {
  std::mt19937_64 rng(4);
  Mlp policy({3, 8, 4}, Activation::kRelu, rng);
  const MatrixXd s = gradcheck::uniform(3, 10, rng);
  const MatrixXd eps = gaussian_noise(2, 10, rng);
  const auto ps = sample_action(policy, s, eps, false, -20, 2);
  const MatrixXd out = policy.forward(s);
  for (int j = 0; j < 10; ++j) {
    double lp = 0.0;
    for (int k = 0; k < 2; ++k) {
      const double mu = out(k, j), ls = std::clamp(out(2 + k, j), -20.0, 2.0), sd = std::exp(ls);
      const double u = mu + sd * eps(k, j);
      lp += -0.5 * eps(k, j) * eps(k, j) - ls - 0.5 * std::log(2 * std::numbers::pi);
      lp -= std::log(1 - std::tanh(u) * std::tanh(u));
      EXPECT_NEAR(ps.action(k, j), std::tanh(u), 1e-12);
    }
    EXPECT_NEAR(ps.log_prob[j], lp, 1e-9);
  }
}

TEST(PolicyTest, SquashedDensityMatchesMonteCarloHistogram) {
  const double mu = 0.4, log_std = -0.3;
  const Mlp policy = ConstantGaussian(mu, log_std);
  std::mt19937_64 rng(8);
  const int n = 200000, bins = 20;
  const MatrixXd s = MatrixXd::Zero(1, n);
  const auto ps = sample_action(policy, s, gaussian_noise(1, n, rng), false, -20, 2);
  std::vector<int> counts(bins, 0);
  for (int j = 0; j < n; ++j) counts[std::min(bins - 1, static_cast<int>((ps.action(0, j) + 1) / 2 * bins))]++;
  const double width = 2.0 / bins;
  for (int b = 2; b < bins - 2; ++b) {
    const double a = -1 + (b + 0.5) * width;
    MatrixXd e(1, 1);
    e(0, 0) = (std::atanh(a) - mu) / std::exp(log_std);
    const double density = std::exp(sample_action(policy, MatrixXd::Zero(1, 1), e, false, -20, 2).log_prob[0]);
    const double empirical = counts[b] / (n * width);
    EXPECT_NEAR(empirical, density, 0.05 * density + 0.01) << "bin " << b;
  }
}

TEST(PolicyTest, DeterministicModeIsTanhMean) {
  const Mlp policy = ConstantGaussian(0.7, 0.0);
  const auto ps = sample_action(policy, MatrixXd::Zero(1, 1), MatrixXd(), true, -20, 2);
  EXPECT_DOUBLE_EQ(ps.action(0, 0), std::tanh(0.7));
}

TEST(PolicyTest, LogStdIsClamped) {
  const Mlp policy = ConstantGaussian(0.0, 5.0);
  const auto ps = sample_action(policy, MatrixXd::Zero(1, 1), MatrixXd::Zero(1, 1), false, -20, 2);
  EXPECT_EQ(ps.log_std(0, 0), 2.0);
  EXPECT_EQ(ps.clamped(0, 0), 1.0);
}

TEST(GradientTest, AllLossesMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = gradcheck::check_seed(seed);
    EXPECT_LT(r.value, 1e-4) << "seed " << seed;
    EXPECT_LT(r.q1, 1e-4) << "seed " << seed;
    EXPECT_LT(r.q2, 1e-4) << "seed " << seed;
    EXPECT_LT(r.policy, 1e-4) << "seed " << seed;
  }
}

TEST(SoftUpdateTest, PolyakAverage) {
  std::mt19937_64 rng(1);
  Mlp online({2, 3, 1}, Activation::kRelu, rng), target({2, 3, 1}, Activation::kRelu, rng);
  const VectorXd before = target.params();
  soft_update_target(target, online, 0.005);
  EXPECT_LT((target.params() - (0.005 * online.params() + 0.995 * before)).norm(), 1e-15);
  soft_update_target(target, online, 1.0);
  EXPECT_EQ(target.params(), online.params());
  Mlp other({2, 4, 1}, Activation::kRelu, rng);
  EXPECT_THROW(soft_update_target(target, other, 0.5), DomainError);
}

TEST(ReplayTest, FifoEvictionAndValidation) {
  ReplayBuffer buf(3, 1, 1);
  for (int i = 0; i < 5; ++i) buf.add({{double(i)}, {0.0}, double(i), {double(i + 1)}, false});
  EXPECT_EQ(buf.size(), 3u);
  EXPECT_EQ(buf.at(0).r, 2.0);
  EXPECT_EQ(buf.at(2).r, 4.0);
  EXPECT_THROW(buf.add({{0.0, 1.0}, {0.0}, 0.0, {0.0}, false}), DomainError);
  EXPECT_THROW(buf.add({{0.0}, {1.5}, 0.0, {0.0}, false}), DomainError);
  EXPECT_THROW(buf.add({{0.0}, {0.0}, std::nan(""), {0.0}, false}), DomainError);
}

TEST(ReplayTest, SampleShapesAndContents) {
  ReplayBuffer buf(10, 2, 1);
  for (int i = 0; i < 10; ++i) buf.add({{double(i), -double(i)}, {0.1}, double(i), {0.0, 0.0}, i == 9});
  std::mt19937_64 rng(3);
  const auto b = buf.sample(64, rng);
  EXPECT_EQ(b.size(), 64);
  EXPECT_EQ(b.s.rows(), 2);
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    EXPECT_EQ(b.s(0, j), b.r[j]);
    EXPECT_EQ(b.s(1, j), -b.r[j]);
    EXPECT_EQ(b.done[j], b.r[j] == 9.0 ? 1.0 : 0.0);
  }
}

SacHyperParams ToyParams() {
  SacHyperParams hp;
  hp.total_steps = 3000;
  hp.warmup_steps = 200;
  hp.batch = 64;
  hp.seed = 5;
  return hp;
}

TEST(TrainTest, ToyTaskConverges) {
  rl::ToyTargetEnv env(0.3, 10), eval(0.3, 10);
  const auto result = train(env, &eval, ToyParams());
  ASSERT_FALSE(result.curve.empty());
  EXPECT_GT(result.curve.back().reward, -0.05);
  TrainedPolicy p{result.agent.policy, ToyParams(), nullptr, 5};
  EXPECT_NEAR(p.act({0.0})[0], 0.3, 0.07);
}

TEST(TrainTest, ToyPerStepRewardAveragedOverSeeds) {
  double total = 0.0;
  for (std::uint64_t seed : {5, 6, 7}) {
    auto hp = ToyParams();
    hp.seed = seed;
    rl::ToyTargetEnv env(0.3, 10), eval(0.3, 10);
    const auto result = train(env, &eval, hp);
    std::vector<double> r;
    for (const auto& c : result.curve) r.push_back(c.reward);
    total += smooth(r, 10).back() / 10.0;
  }
  EXPECT_GE(total / 3.0, -0.01);
}

TEST(TrainTest, SameSeedIsBitIdentical) {
  auto hp = ToyParams();
  hp.total_steps = 600;
  rl::ToyTargetEnv a(0.3, 10), b(0.3, 10);
  const auto ra = train(a, nullptr, hp), rb = train(b, nullptr, hp);
  EXPECT_EQ(format_curve(ra.curve), format_curve(rb.curve));
  EXPECT_EQ(ra.agent.policy.params(), rb.agent.policy.params());
}

TEST(TrainTest, NonFiniteLossRaisesWithBatchDump) {
  SacHyperParams hp;
  hp.hidden = {4};
  SacAgent agent(1, 1, hp);
  agent.q1.params()[0] = std::nan("");
  ReplayBuffer buf(8, 1, 1);
  for (int i = 0; i < 8; ++i) buf.add({{0.1 * i}, {0.0}, 1.0, {0.0}, false});
  std::mt19937_64 rng(1);
  try {
    agent.gradient_step(buf.sample(4, rng));
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_NE(e.dump.find("\n"), std::string::npos);
  }
}

TEST(HyperParamsTest, ValidationAndJson) {
  SacHyperParams hp;
  EXPECT_NO_THROW(hp.validate());
  const auto back = hyperparams_from_json(to_json(hp));
  EXPECT_EQ(to_json(back), to_json(hp));
  hp.tau = 1.5;
  EXPECT_THROW(hp.validate(), DomainError);
  hp = {};
  hp.batch = 0;
  EXPECT_THROW(hp.validate(), DomainError);
}

TEST(CheckpointTest, RoundTripPreservesActions) {
  SacHyperParams hp;
  hp.hidden = {16, 16};
  SacAgent agent(3, 3, hp);
  TrainedPolicy p{agent.policy, hp, nlohmann::json{{"delay", {0.1, 0.2}}}, 42};
  const auto path = (std::filesystem::temp_directory_path() / "roiadapt_ckpt.json").string();
  save_checkpoint(path, p, {{"note", "x"}});
  const auto back = load_checkpoint(path);
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.env_bounds, p.env_bounds);
  EXPECT_EQ(back.act({0.1, 0.5, 0.9}), p.act({0.1, 0.5, 0.9}));
  auto j = checkpoint_json(p);
  j["format"] = "other";
  EXPECT_THROW(policy_from_checkpoint(j), ParseError);
}

TEST(CurveTest, SmoothingAndCsv) {
  EXPECT_EQ(smooth({1, 2, 3, 4}, 2), (std::vector<double>{1, 1.5, 2.5, 3.5}));
  std::vector<CurvePoint> c = {{10, 0, -1.5, 0}, {20, 1, 0.25, 0}};
  const auto back = parse_curve(format_curve(c, "hash"));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].reward, 0.25);
  EXPECT_EQ(back[1].step, 20u);
}

}  // namespace
}  // namespace roiadapt::sac

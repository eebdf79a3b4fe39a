#include "roiadapt/env.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "roiadapt/error.hpp"
#include "roiadapt/quality.hpp"

namespace roiadapt::env {
namespace {

class EnvTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    frames_ = new dataset::FrameSet(dataset::synth_frames(21, 6, 128, 96));
    trace_ = new traces::ThroughputTrace(traces::synth_trace(4, 40));
    std::vector<sizemodel::SizeSample> samples;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 200; ++i) {
      const auto& f = (*frames_)[i % frames_->size()];
      const auto [roi, qf] = apply_action(f.roi, f.width, f.height, {u(rng), u(rng), u(rng)});
      samples.push_back({roi.w, roi.h, qf, static_cast<long long>(codec::encode_frame(f, roi, qf).byte_size())});
    }
    model_ = new sizemodel::PolynomialModel(sizemodel::fit_polynomial(samples));
  }
  static void TearDownTestSuite() {
    delete frames_;
    delete trace_;
    delete model_;
  }

  static dataset::FrameSet* frames_;
  static traces::ThroughputTrace* trace_;
  static sizemodel::PolynomialModel* model_;
};

dataset::FrameSet* EnvTest::frames_ = nullptr;
traces::ThroughputTrace* EnvTest::trace_ = nullptr;
sizemodel::PolynomialModel* EnvTest::model_ = nullptr;

TEST(ApplyActionTest, IdentityGrowth) {
  const codec::RoiBox roi{64, 48, 80, 64};
  const auto [out, qf] = apply_action(roi, 320, 240, {0, 0, 1});
  EXPECT_EQ(out, roi);
  EXPECT_EQ(qf, 100);
}

TEST(ApplyActionTest, FullGrowthReachesFrame) {
  for (const codec::RoiBox roi : {codec::RoiBox{0, 0, 8, 8}, codec::RoiBox{64, 48, 80, 64}, codec::RoiBox{304, 224, 16, 16}}) {
    const auto [out, qf] = apply_action(roi, 320, 240, {1, 1, 0.3});
    EXPECT_EQ(out, (codec::RoiBox{0, 0, 320, 240}));
    EXPECT_EQ(qf, 30);
  }
}

TEST(ApplyActionTest, HalfGrowthGeometry) {
  // w' = 80 + 0.5 * 240 = 200 centered at 104 -> [4, 204) -> snapped [0, 208)
  // h' = 64 + 0.5 * 176 = 152 centered at 80 -> [4, 156) -> snapped [0, 160)
  const auto [out, qf] = apply_action({64, 48, 80, 64}, 320, 240, {0.5, 0.5, 0.5});
  EXPECT_EQ(out, (codec::RoiBox{0, 0, 208, 160}));
  EXPECT_EQ(qf, 50);
}

TEST(ApplyActionTest, QfMappingAndClamping) {
  const codec::RoiBox roi{8, 8, 8, 8};
  EXPECT_EQ(apply_action(roi, 64, 64, {0, 0, 0}).second, 1);
  EXPECT_EQ(apply_action(roi, 64, 64, {0, 0, 0.004}).second, 1);
  EXPECT_EQ(apply_action(roi, 64, 64, {0, 0, 0.555}).second, 56);
  EXPECT_EQ(apply_action(roi, 64, 64, {-3, 7, 2}).second, 100);
}

TEST(ApplyActionTest, GrowthIsMonotoneAndContainsOriginal) {
  std::mt19937 rng(3);
  for (int i = 0; i < 200; ++i) {
    const int w = 8 * (1 + rng() % 20), h = 8 * (1 + rng() % 15);
    const codec::RoiBox roi{8 * static_cast<int>(rng() % ((320 - w) / 8 + 1)),
                            8 * static_cast<int>(rng() % ((240 - h) / 8 + 1)), w, h};
    const double g = (rng() % 1000) / 1000.0;
    const auto a = apply_action(roi, 320, 240, {g, g, 0.5}).first;
    const auto b = apply_action(roi, 320, 240, {std::min(1.0, g + 0.1), std::min(1.0, g + 0.1), 0.5}).first;
    EXPECT_TRUE(a.fits(320, 240));
    EXPECT_LE(a.x0, roi.x0);
    EXPECT_GE(a.x0 + a.w, roi.x0 + roi.w);
    EXPECT_LE(a.area(), b.area());
    EXPECT_EQ(a.x0 % 8, 0);
    EXPECT_EQ(a.w % 8, 0);
  }
}

TEST(RewardTest, PaperExamples) {
  EXPECT_EQ(paper_reward(0.5, 0.5, 1.0, 5.0), 4.0);
  EXPECT_EQ(paper_reward(0.1, 0.9, 9.0, 5.0), 1.0);
  // at the threshold the upper branch applies
  EXPECT_EQ(paper_reward(0.5, 0.5, 5.0, 5.0), 1.0);
}

TEST(RewardTest, MinDelayMaxQuality) {
  EXPECT_DOUBLE_EQ(min_delay_max_quality_reward(0.1, 0.9, 0.2, 0.5, 0.5), 0.5 * 0.5 + 0.45);
  EXPECT_DOUBLE_EQ(min_delay_max_quality_reward(0.0, 1.0, 0.2, 0.5, 0.5), 1.0);
}

TEST(RewardTest, PresetNames) {
  EXPECT_EQ(reward_preset_from_string("paper"), RewardPreset::kPaper);
  EXPECT_EQ(to_string(RewardPreset::kMinDelayMaxQuality), "min-delay-max-quality");
  EXPECT_THROW(reward_preset_from_string("rational"), DomainError);
  EXPECT_THROW(size_mode_from_string("guess"), DomainError);
}

TEST(BoundsTest, NormalizeClamps) {
  const Bounds b{2.0, 6.0};
  EXPECT_EQ(b.normalize(4.0), 0.5);
  EXPECT_EQ(b.normalize(-1.0), 0.0);
  EXPECT_EQ(b.normalize(10.0), 1.0);
}

TEST_F(EnvTest, ResetIsReproducibleAndUsesFirstTraceSample) {
  RoiEnv env(*frames_, *trace_, {});
  const auto a = env.reset(), b = env.reset();
  EXPECT_EQ(a.delay, b.delay);
  EXPECT_EQ(a.quality, b.quality);
  EXPECT_EQ(a.throughput, trace_->at(0));
  for (double v : a.normalized) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST_F(EnvTest, BootstrapQualityOfAllRoiFrameIsOne) {
  const auto base = dataset::synth_frames(1, 1, 64, 64);
  dataset::FrameSet all_roi = base;
  all_roi.frames[0].roi = {0, 0, 64, 64};
  RoiEnv env(all_roi, *trace_, {});
  EXPECT_EQ(env.reset().quality, 1.0);
}

TEST_F(EnvTest, StepProtocol) {
  EnvConfig cfg;
  cfg.episode_length = 3;
  RoiEnv env(*frames_, *trace_, cfg);
  EXPECT_THROW(env.step({}), ProtocolError);
  env.reset();
  EXPECT_FALSE(env.step({}).done);
  EXPECT_FALSE(env.step({}).done);
  EXPECT_TRUE(env.step({}).done);
  EXPECT_THROW(env.step({}), ProtocolError);
}

TEST_F(EnvTest, DefaultEpisodeLengthAndThreshold) {
  RoiEnv env(*frames_, *trace_, {});
  EXPECT_EQ(env.episode_length(), frames_->size());
  EXPECT_DOUBLE_EQ(env.reward_threshold(), (trace_->min_mbps() + trace_->max_mbps()) / 2);
  EnvConfig cfg;
  cfg.reward.threshold = kPaperRewardThreshold;
  EXPECT_EQ(RoiEnv(*frames_, *trace_, cfg).reward_threshold(), 103076.0);
}

TEST_F(EnvTest, FixedActionReplayMatchesStandaloneComputation) {
  EnvConfig cfg;
  cfg.episode_length = 15;
  cfg.reward.preset = RewardPreset::kPaper;
  RoiEnv env(*frames_, *trace_, cfg);
  env.reset(5);
  for (std::size_t t = 0; t < 15; ++t) {
    const auto o = env.step({0, 0, 1});
    const auto& f = (*frames_)[t % frames_->size()];
    const auto enc = codec::encode_frame(f, f.roi, 100);
    const double T = trace_->at(5 + t);
    const double delay = static_cast<double>(enc.byte_size()) * 8 / (T * 1e6);
    const double q = quality::ssim(f, codec::decode_frame(enc)).mean_ssim;
    EXPECT_EQ(o.info.encoded_bytes, static_cast<long long>(enc.byte_size()));
    EXPECT_DOUBLE_EQ(o.info.delay, delay);
    EXPECT_DOUBLE_EQ(o.info.quality, q);
    EXPECT_DOUBLE_EQ(o.reward, paper_reward(delay, q, T, env.reward_threshold()));
    EXPECT_DOUBLE_EQ(o.info.reward_below, 1 / delay + 1 / q);
    EXPECT_DOUBLE_EQ(o.info.reward_above, delay + q);
    EXPECT_EQ(o.next_state.delay, delay);
    EXPECT_EQ(o.next_state.throughput, trace_->at(5 + t + 1));
  }
}

TEST_F(EnvTest, HigherQfNeverLowersQuality) {
  std::vector<double> prev(frames_->size(), -1.0);
  for (double qn : {0.01, 0.2, 0.4, 0.6, 0.8, 1.0}) {
    RoiEnv env(*frames_, *trace_, {});
    env.reset();
    for (std::size_t k = 0; k < frames_->size(); ++k) {
      const double q = env.step({0.2, 0.2, qn}).info.quality;
      EXPECT_GE(q, prev[k] - 1e-3) << "frame " << k << " qf_norm " << qn;
      prev[k] = q;
    }
  }
}

TEST_F(EnvTest, RegressionModeTracksMeasuredDelay) {
  EnvConfig measured;
  measured.episode_length = 1;
  EnvConfig regression = measured;
  regression.size_mode = SizeMode::kRegression;
  auto table = std::make_shared<const QualityTable>(*frames_);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> xs, ys;
  for (int i = 0; i < 60; ++i) {
    const Action a{u(rng), u(rng), u(rng)};
    RoiEnv m(*frames_, *trace_, measured), r(*frames_, *trace_, regression, model_, table);
    m.reset(i);
    r.reset(i);
    xs.push_back(m.step(a).info.delay);
    ys.push_back(r.step(a).info.delay);
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i] / n, my += ys[i] / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  EXPECT_GE(sxy / std::sqrt(sxx * syy), 0.85);
}

TEST_F(EnvTest, RegressionModeRequiresModel) {
  EnvConfig cfg;
  cfg.size_mode = SizeMode::kRegression;
  EXPECT_THROW(RoiEnv(*frames_, *trace_, cfg), DomainError);
}

TEST_F(EnvTest, QualityTableInterpolates) {
  const QualityTable table(*frames_);
  const auto& f = (*frames_)[0];
  const auto roi = codec::snap_outward(f.roi, f.width, f.height);
  EXPECT_DOUBLE_EQ(table.lookup(0, 50, roi), table.at_grid(0, 5));
  EXPECT_DOUBLE_EQ(table.lookup(0, 55, roi), 0.5 * (table.at_grid(0, 5) + table.at_grid(0, 6)));
  EXPECT_DOUBLE_EQ(table.lookup(0, 30, {0, 0, f.width, f.height}), 1.0);
}

TEST_F(EnvTest, AdapterMapsActionRange) {
  const auto a = RoiEnvAdapter::to_env_action({-1.0, 0.0, 1.0});
  EXPECT_EQ(a.x_grow, 0.0);
  EXPECT_EQ(a.y_grow, 0.5);
  EXPECT_EQ(a.qf_norm, 1.0);
  EnvConfig cfg;
  cfg.episode_length = 2;
  RoiEnv env(*frames_, *trace_, cfg);
  RoiEnvAdapter adapter(env);
  adapter.reset();
  adapter.step({0, 0, 0});
  EXPECT_TRUE(adapter.step({0, 0, 0}).truncated);
  adapter.reset();
  EXPECT_EQ(adapter.step({0, 0, 0}).reward, adapter.last().reward);
  EXPECT_EQ(adapter.last().info.throughput, trace_->at(2));
}

TEST_F(EnvTest, EpisodeLogRoundTrip) {
  RoiEnv env(*frames_, *trace_, {});
  env.reset();
  std::vector<EpisodeLogRow> rows;
  for (std::size_t t = 0; t < env.episode_length(); ++t) rows.push_back(log_row(t, env.step({0.3, 0.1, 0.7})));
  const auto text = format_episode_log(rows, "seed=1");
  const auto back = parse_episode_log(text);
  ASSERT_EQ(back.size(), rows.size());
  EXPECT_EQ(format_episode_log(back, "seed=1"), text);
}

}  // namespace
}  // namespace roiadapt::env

#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "roiadapt/codec.hpp"
#include "roiadapt/dataset.hpp"
#include "roiadapt/environment.hpp"
#include "roiadapt/sizemodel.hpp"
#include "roiadapt/traces.hpp"

namespace roiadapt::env {

// Agent action, each component in [0,1]: ROI growth toward the full frame
// along x and y, and the normalized background quality factor.
struct Action {
  double x_grow = 0.0;
  double y_grow = 0.0;
  double qf_norm = 1.0;
};

struct Bounds {
  double min = 0.0;
  double max = 1.0;
  double normalize(double v) const;
};

// Min-max bounds for the state; defaults are the ranges reported for the
// original system's evaluation.
struct NormalizationBounds {
  Bounds throughput{traces::kPaperMinMbps, traces::kPaperMaxMbps};
  Bounds delay{0.0791, 0.2541};
  Bounds quality{0.6144, 0.9839};
};

struct StateObs {
  double delay = 0.0;       // seconds, previous step
  double quality = 0.0;     // SSIM, previous step
  double throughput = 0.0;  // Mb/s, current step
  std::array<double, 3> normalized{};
};

enum class SizeMode { kMeasured, kRegression };
enum class RewardPreset { kPaper, kMinDelayMaxQuality };

inline constexpr double kPaperRewardThreshold = 103076.0;

std::string to_string(SizeMode m);
std::string to_string(RewardPreset p);
SizeMode size_mode_from_string(const std::string& s);
RewardPreset reward_preset_from_string(const std::string& s);

struct RewardConfig {
  RewardPreset preset = RewardPreset::kMinDelayMaxQuality;
  // Throughput threshold in the trace's unit; unset means the midpoint of the
  // trace's observed range.
  std::optional<double> threshold;
  double w_delay = 0.5;
  double w_quality = 0.5;
};

// (1/delay + 1/quality) below the threshold, (delay + quality) at or above.
double paper_reward(double delay, double quality, double throughput, double threshold);
// w_delay * (1 - delay/delay_max) + w_quality * quality.
double min_delay_max_quality_reward(double delay, double quality, double delay_max, double w_delay, double w_quality);

struct EnvConfig {
  SizeMode size_mode = SizeMode::kMeasured;
  RewardConfig reward;
  NormalizationBounds bounds;
  std::size_t episode_length = 0;  // 0: min(frame count, trace length)
};

struct StepInfo {
  long long encoded_bytes = 0;
  codec::RoiBox effective_roi;
  int qf_used = 0;
  SizeMode size_mode = SizeMode::kMeasured;
  double delay = 0.0;
  double quality = 0.0;
  double throughput = 0.0;
  // Both reward branches, logged for auditing the threshold switch.
  double reward_below = 0.0;
  double reward_above = 0.0;
  bool size_clamped = false;
};

struct StepOutcome {
  StateObs next_state;
  double reward = 0.0;
  StepInfo info;
  bool done = false;
};

// Grows `roi` symmetrically about its center by the action's fractions of the
// remaining frame extent, clips and snaps it to the 8-pixel grid, and maps
// qf_norm to an integer quality factor in [1,100].
std::pair<codec::RoiBox, int> apply_action(const codec::RoiBox& roi, int frame_w, int frame_h, const Action& a);

// Per-frame SSIM at the original ROI for a grid of quality factors, used to
// approximate quality without decoding in regression mode.
class QualityTable {
 public:
  static constexpr std::array<int, 11> kGrid = {1, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100};

  explicit QualityTable(const dataset::FrameSet& frames);
  // Linear interpolation in qf, then scaled by the share of lossy area that
  // the effective ROI still leaves in the background.
  double lookup(std::size_t frame_index, int qf, const codec::RoiBox& effective_roi) const;
  double at_grid(std::size_t frame_index, std::size_t grid_index) const { return table_[frame_index][grid_index]; }

 private:
  std::vector<std::array<double, kGrid.size()>> table_;
  std::vector<long long> bg_area_;
  std::vector<long long> frame_area_;
};

// Referenced frames, trace, model, and quality table must outlive the
// environment; they are never modified and may be shared across instances.
class RoiEnv {
 public:
  RoiEnv(const dataset::FrameSet& frames, const traces::ThroughputTrace& trace, EnvConfig config,
         const sizemodel::PolynomialModel* model = nullptr, std::shared_ptr<const QualityTable> quality = nullptr);

  // Cursors to the start of the frame set and to `trace_offset` in the trace;
  // previous-step delay/quality come from encoding the first frame at its
  // original ROI and qf=100.
  StateObs reset(std::size_t trace_offset = 0);
  StepOutcome step(const Action& a);

  std::size_t episode_length() const { return episode_length_; }
  std::size_t steps_taken() const { return step_; }
  double reward_threshold() const { return threshold_; }
  const EnvConfig& config() const { return config_; }
  long long clamp_count() const { return clamp_count_; }
  const std::shared_ptr<const QualityTable>& quality_table() const { return quality_; }

  StateObs make_state(double delay, double quality, double throughput) const;
  double reward(double delay, double quality, double throughput) const;

 private:
  struct Measure {
    long long bytes;
    double quality;
    bool clamped;
  };
  Measure measure(std::size_t frame_index, const codec::RoiBox& roi, int qf) const;

  const dataset::FrameSet& frames_;
  const traces::ThroughputTrace& trace_;
  EnvConfig config_;
  const sizemodel::PolynomialModel* model_;
  std::shared_ptr<const QualityTable> quality_;
  std::size_t episode_length_ = 0;
  double threshold_ = 0.0;
  std::size_t step_ = 0;
  std::size_t trace_offset_ = 0;
  bool started_ = false;
  long long clamp_count_ = 0;
};

// Adapts RoiEnv to the agent interface: actions in [-1,1] map affinely onto
// [0,1], observations are the normalized state, and each reset advances the
// trace offset by one episode so training walks the whole trace. With
// `advance` off every episode replays the same trace window.
class RoiEnvAdapter : public rl::Environment {
 public:
  explicit RoiEnvAdapter(RoiEnv& env, bool advance = true) : env_(env), advance_(advance) {}
  int observation_dim() const override { return 3; }
  int action_dim() const override { return 3; }
  std::vector<double> reset() override;
  rl::EnvStep step(const std::vector<double>& action) override;

  static Action to_env_action(const std::vector<double>& a);
  const StepOutcome& last() const { return last_; }

 private:
  RoiEnv& env_;
  bool advance_ = true;
  std::size_t next_offset_ = 0;
  StepOutcome last_;
};

struct EpisodeLogRow {
  std::size_t step = 0;
  double throughput_mbps = 0.0;
  int roi_w = 0;
  int roi_h = 0;
  int qf = 0;
  long long bytes = 0;
  double delay_s = 0.0;
  double ssim = 0.0;
  double reward = 0.0;
};

EpisodeLogRow log_row(std::size_t step, const StepOutcome& o);
// CSV `step,throughput_mbps,roi_w,roi_h,qf,bytes,delay_s,ssim,reward`.
std::string format_episode_log(const std::vector<EpisodeLogRow>& rows, const std::string& comment = {});
std::vector<EpisodeLogRow> parse_episode_log(const std::string& text, const std::string& source = "<log>");

}  // namespace roiadapt::env

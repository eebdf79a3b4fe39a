#include "roiadapt/env.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "roiadapt/error.hpp"
#include "roiadapt/quality.hpp"
#include "roiadapt/textio.hpp"

namespace roiadapt::env {

double Bounds::normalize(double v) const {
  if (!(max > min)) return 0.0;
  return std::clamp((v - min) / (max - min), 0.0, 1.0);
}

std::string to_string(SizeMode m) { return m == SizeMode::kMeasured ? "measured" : "regression"; }

std::string to_string(RewardPreset p) { return p == RewardPreset::kPaper ? "paper" : "min-delay-max-quality"; }

SizeMode size_mode_from_string(const std::string& s) {
  if (s == "measured") return SizeMode::kMeasured;
  if (s == "regression") return SizeMode::kRegression;
  throw DomainError("unknown size mode '" + s + "' (measured|regression)");
}

RewardPreset reward_preset_from_string(const std::string& s) {
  if (s == "paper") return RewardPreset::kPaper;
  if (s == "min-delay-max-quality") return RewardPreset::kMinDelayMaxQuality;
  throw DomainError("unknown reward preset '" + s + "' (paper|min-delay-max-quality)");
}

double paper_reward(double delay, double quality, double throughput, double threshold) {
  if (throughput < threshold) return 1.0 / delay + 1.0 / quality;
  return delay + quality;
}

double min_delay_max_quality_reward(double delay, double quality, double delay_max, double w_delay, double w_quality) {
  return w_delay * (1.0 - delay / delay_max) + w_quality * quality;
}

std::pair<codec::RoiBox, int> apply_action(const codec::RoiBox& roi, int frame_w, int frame_h, const Action& a) {
  if (!roi.fits(frame_w, frame_h)) throw DomainError("apply_action: ROI outside frame");
  const double xg = std::clamp(a.x_grow, 0.0, 1.0);
  const double yg = std::clamp(a.y_grow, 0.0, 1.0);
  const double qn = std::clamp(a.qf_norm, 0.0, 1.0);

  auto grow = [](int start, int extent, int limit, double g) {
    const double grown = extent + g * (limit - extent);
    double lo = start - (grown - extent) / 2.0;
    lo = std::clamp(lo, 0.0, limit - grown);
    const int a0 = std::max(0, static_cast<int>(std::floor(lo + 1e-9)));
    const int a1 = std::min(limit, static_cast<int>(std::ceil(lo + grown - 1e-9)));
    return std::pair{a0, a1};
  };
  const auto [x0, x1] = grow(roi.x0, roi.w, frame_w, xg);
  const auto [y0, y1] = grow(roi.y0, roi.h, frame_h, yg);
  codec::RoiBox out = codec::snap_outward({x0, y0, x1 - x0, y1 - y0}, frame_w, frame_h);
  const int qf = std::max(1, static_cast<int>(std::lround(qn * 100.0)));
  return {out, qf};
}

QualityTable::QualityTable(const dataset::FrameSet& frames) {
  table_.resize(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    for (std::size_t g = 0; g < kGrid.size(); ++g) {
      const auto decoded = codec::decode_frame(codec::encode_frame(f, f.roi, kGrid[g]));
      table_[i][g] = quality::ssim(f, decoded).mean_ssim;
    }
    const auto snapped = codec::snap_outward(f.roi, f.width, f.height);
    frame_area_.push_back(static_cast<long long>(f.width) * f.height);
    bg_area_.push_back(frame_area_.back() - snapped.area());
  }
}

double QualityTable::lookup(std::size_t frame_index, int qf, const codec::RoiBox& effective_roi) const {
  const auto& row = table_.at(frame_index);
  double base = row.back();
  for (std::size_t g = 1; g < kGrid.size(); ++g) {
    if (qf <= kGrid[g]) {
      const double t = static_cast<double>(qf - kGrid[g - 1]) / (kGrid[g] - kGrid[g - 1]);
      base = row[g - 1] + t * (row[g] - row[g - 1]);
      break;
    }
  }
  const long long bg = bg_area_[frame_index];
  if (bg <= 0) return 1.0;
  const double remaining = static_cast<double>(std::max(0LL, frame_area_[frame_index] - effective_roi.area()));
  const double share = std::min(1.0, remaining / static_cast<double>(bg));
  return 1.0 - (1.0 - base) * share;
}

RoiEnv::RoiEnv(const dataset::FrameSet& frames, const traces::ThroughputTrace& trace, EnvConfig config,
               const sizemodel::PolynomialModel* model, std::shared_ptr<const QualityTable> quality)
    : frames_(frames), trace_(trace), config_(std::move(config)), model_(model), quality_(std::move(quality)) {
  if (frames_.size() == 0) throw DomainError("environment needs at least one frame");
  if (config_.size_mode == SizeMode::kRegression) {
    if (!model_) throw DomainError("regression size mode requires a fitted size model");
    if (!quality_) quality_ = std::make_shared<QualityTable>(frames_);
  }
  episode_length_ = config_.episode_length ? config_.episode_length : std::min(frames_.size(), trace_.size());
  threshold_ = config_.reward.threshold.value_or((trace_.min_mbps() + trace_.max_mbps()) / 2.0);
  if (!(config_.bounds.delay.max > 0.0)) throw DomainError("delay normalization max must be positive");
}

RoiEnv::Measure RoiEnv::measure(std::size_t frame_index, const codec::RoiBox& roi, int qf) const {
  const auto& frame = frames_[frame_index];
  if (config_.size_mode == SizeMode::kMeasured) {
    const auto encoded = codec::encode_frame(frame, roi, qf);
    const auto decoded = codec::decode_frame(encoded);
    return {static_cast<long long>(encoded.byte_size()), quality::ssim(frame, decoded).mean_ssim, false};
  }
  const auto est = sizemodel::estimate_size(*model_, static_cast<double>(roi.area()), qf);
  return {std::max(1LL, std::llround(est.bytes)), quality_->lookup(frame_index, qf, roi), est.clamped};
}

StateObs RoiEnv::make_state(double delay, double quality, double throughput) const {
  StateObs s{delay, quality, throughput, {}};
  s.normalized = {config_.bounds.delay.normalize(delay), config_.bounds.quality.normalize(quality),
                  config_.bounds.throughput.normalize(throughput)};
  return s;
}

double RoiEnv::reward(double delay, double quality, double throughput) const {
  if (config_.reward.preset == RewardPreset::kPaper) return paper_reward(delay, quality, throughput, threshold_);
  return min_delay_max_quality_reward(delay, quality, config_.bounds.delay.max, config_.reward.w_delay,
                                      config_.reward.w_quality);
}

StateObs RoiEnv::reset(std::size_t trace_offset) {
  step_ = 0;
  trace_offset_ = trace_offset;
  started_ = true;
  const auto& first = frames_[0];
  const auto boot = measure(0, codec::snap_outward(first.roi, first.width, first.height), 100);
  const double t0 = trace_.at(trace_offset_);
  return make_state(sizemodel::delay_seconds(static_cast<double>(boot.bytes), t0), boot.quality, t0);
}

StepOutcome RoiEnv::step(const Action& a) {
  if (!started_) throw ProtocolError("step called before reset");
  if (step_ >= episode_length_) throw ProtocolError("step called after the episode ended");
  const std::size_t frame_index = step_ % frames_.size();
  const auto& frame = frames_[frame_index];
  const double throughput = trace_.at(trace_offset_ + step_);
  const auto [roi, qf] = apply_action(frame.roi, frame.width, frame.height, a);
  const auto m = measure(frame_index, roi, qf);
  if (m.clamped) ++clamp_count_;

  StepOutcome out;
  const double delay = sizemodel::delay_seconds(static_cast<double>(m.bytes), throughput);
  out.reward = reward(delay, m.quality, throughput);
  out.info.encoded_bytes = m.bytes;
  out.info.effective_roi = roi;
  out.info.qf_used = qf;
  out.info.size_mode = config_.size_mode;
  out.info.delay = delay;
  out.info.quality = m.quality;
  out.info.throughput = throughput;
  out.info.reward_below = 1.0 / delay + 1.0 / m.quality;
  out.info.reward_above = delay + m.quality;
  out.info.size_clamped = m.clamped;
  ++step_;
  out.done = step_ >= episode_length_;
  out.next_state = make_state(delay, m.quality, trace_.at(trace_offset_ + step_));
  return out;
}

Action RoiEnvAdapter::to_env_action(const std::vector<double>& a) {
  auto map = [](double v) { return std::clamp((v + 1.0) / 2.0, 0.0, 1.0); };
  return {map(a.at(0)), map(a.at(1)), map(a.at(2))};
}

std::vector<double> RoiEnvAdapter::reset() {
  const auto s = env_.reset(next_offset_);
  if (advance_) next_offset_ += env_.episode_length();
  return {s.normalized.begin(), s.normalized.end()};
}

rl::EnvStep RoiEnvAdapter::step(const std::vector<double>& action) {
  last_ = env_.step(to_env_action(action));
  rl::EnvStep out;
  out.observation.assign(last_.next_state.normalized.begin(), last_.next_state.normalized.end());
  out.reward = last_.reward;
  out.truncated = last_.done;
  return out;
}

EpisodeLogRow log_row(std::size_t step, const StepOutcome& o) {
  return {step,
          o.info.throughput,
          o.info.effective_roi.w,
          o.info.effective_roi.h,
          o.info.qf_used,
          o.info.encoded_bytes,
          o.info.delay,
          o.info.quality,
          o.reward};
}

std::string format_episode_log(const std::vector<EpisodeLogRow>& rows, const std::string& comment) {
  using textio::format_double;
  std::ostringstream os;
  if (!comment.empty()) os << "# " << comment << '\n';
  os << "step,throughput_mbps,roi_w,roi_h,qf,bytes,delay_s,ssim,reward\n";
  for (const auto& r : rows)
    os << r.step << ',' << format_double(r.throughput_mbps) << ',' << r.roi_w << ',' << r.roi_h << ',' << r.qf << ','
       << r.bytes << ',' << format_double(r.delay_s) << ',' << format_double(r.ssim) << ','
       << format_double(r.reward) << '\n';
  return os.str();
}

std::vector<EpisodeLogRow> parse_episode_log(const std::string& text, const std::string& source) {
  std::vector<EpisodeLogRow> out;
  for (const auto& row : textio::parse_csv(
           text, {"step", "throughput_mbps", "roi_w", "roi_h", "qf", "bytes", "delay_s", "ssim", "reward"}, source)) {
    out.push_back({static_cast<std::size_t>(textio::to_int64(row, 0)), textio::to_double(row, 1),
                   textio::to_int(row, 2), textio::to_int(row, 3), textio::to_int(row, 4), textio::to_int64(row, 5),
                   textio::to_double(row, 6), textio::to_double(row, 7), textio::to_double(row, 8)});
  }
  return out;
}

}  // namespace roiadapt::env

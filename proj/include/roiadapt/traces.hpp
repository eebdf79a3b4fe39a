#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace roiadapt::traces {

inline constexpr double kPaperMinMbps = 1.7912;
inline constexpr double kPaperMaxMbps = 9.5001;

struct TraceSample {
  double t_seconds = 0.0;
  double throughput_mbps = 0.0;
};

struct SyntheticSource {
  std::uint64_t seed = 0;
  double min_mbps = kPaperMinMbps;
  double max_mbps = kPaperMaxMbps;
  double step_sigma = 0.0;
};

class ThroughputTrace {
 public:
  // Validates strictly increasing timestamps and positive throughput.
  explicit ThroughputTrace(std::vector<TraceSample> samples, bool synthetic = false, SyntheticSource source = {});

  std::size_t size() const { return samples_.size(); }
  const std::vector<TraceSample>& samples() const { return samples_; }
  bool synthetic() const { return synthetic_; }
  const SyntheticSource& source() const { return source_; }
  double min_mbps() const { return min_; }
  double max_mbps() const { return max_; }

  // Throughput at `step`, wrapping cyclically past the end.
  double at(std::size_t step) const { return samples_[step % samples_.size()].throughput_mbps; }

 private:
  std::vector<TraceSample> samples_;
  bool synthetic_ = false;
  SyntheticSource source_;
  double min_ = 0.0;
  double max_ = 0.0;
};

// CSV `t_seconds,throughput_mbps`; errors carry the offending line number.
ThroughputTrace load_trace(const std::string& path);
ThroughputTrace parse_trace(const std::string& text, const std::string& source = "<trace>");
std::string format_trace(const ThroughputTrace& trace);
void save_trace(const std::string& path, const ThroughputTrace& trace);

// Gaussian random walk reflected into [min, max], starting at the midpoint,
// one sample per second.
ThroughputTrace synth_trace(std::uint64_t seed, std::size_t n, double min_mbps = kPaperMinMbps,
                            double max_mbps = kPaperMaxMbps, double step_sigma = 0.5);

}  // namespace roiadapt::traces

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roiadapt/dataset.hpp"
#include "roiadapt/env.hpp"
#include "roiadapt/traces.hpp"

namespace roiadapt::stream {

enum class MessageKind : std::uint8_t { kFrame = 1, kAck = 2, kEnd = 3 };

inline constexpr std::size_t kWireHeaderBytes = 17;

// kind u8 | frame_id u32 | send_ts_us u64 | payload_len u32 | payload, all
// big-endian. Acks carry the receiver's receive timestamp in send_ts_us.
struct WireMessage {
  MessageKind kind = MessageKind::kFrame;
  std::uint32_t frame_id = 0;
  std::uint64_t send_ts_us = 0;
  std::vector<std::uint8_t> payload;

  std::vector<std::uint8_t> serialize() const;
  // Throws ParseError on unknown kind, length mismatch, or payload on a
  // non-frame message.
  static WireMessage parse(std::span<const std::uint8_t> bytes);
};

struct DelayRecord {
  std::uint32_t frame_id = 0;
  long long bytes = 0;
  int qf = 0;
  int roi_w = 0;
  int roi_h = 0;
  std::uint64_t send_ts_us = 0;
  std::uint64_t recv_ts_us = 0;
  double delay_s = 0.0;
};

struct SessionLog {
  std::vector<DelayRecord> records;
  std::vector<std::string> errors;  // per-frame decode failures, protocol errors
  bool protocol_error = false;
  std::string mode;                 // how delay_s was obtained
};

// CSV `frame_id,bytes,qf,roi_w,roi_h,send_ts_us,recv_ts_us,delay_s`.
std::string format_delay_log(const SessionLog& log);
SessionLog parse_delay_log(const std::string& text, const std::string& source = "<log>");

// Microseconds on the host-wide monotonic clock.
std::uint64_t monotonic_us();

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};
Endpoint parse_endpoint(const std::string& host_port);

// Accepts one TCP session. Frames are handed from the reading loop to a
// decode worker that validates the container, optionally writes the decoded
// luma as PGM, and answers with an ack.
class Receiver {
 public:
  explicit Receiver(const std::string& bind_addr, std::string decodes_dir = {});
  ~Receiver();
  Receiver(const Receiver&) = delete;
  Receiver& operator=(const Receiver&) = delete;

  std::uint16_t port() const { return port_; }
  SessionLog run();

 private:
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::string decodes_dir_;
};

SessionLog serve_receiver(const std::string& bind_addr, std::string decodes_dir = {});

using PolicyFn = std::function<env::Action(const env::StateObs&)>;

// Fixed action presets: `low` keeps the original ROI at qf 1, `high` sends
// the full frame at qf 100.
env::Action preset_action(const std::string& name);

struct SenderOptions {
  bool pace = true;
  double quantum_s = 0.01;  // token-bucket refill granularity
  bool same_host = true;    // trust one-way timestamps; otherwise RTT/2
  std::size_t frame_count = 0;  // 0: one pass over the frame set
  env::NormalizationBounds bounds;
};

// Per frame: read throughput from the trace, build the state from the
// previous frame's measured delay and quality, query the policy, encode and
// transmit, wait for the ack. With pacing the write rate follows the trace.
// Connection failures throw; a reset mid-session ends it with the partial log.
SessionLog run_sender(const std::string& connect_addr, const dataset::FrameSet& frames,
                      const traces::ThroughputTrace& trace, const PolicyFn& policy, const SenderOptions& options);

struct DelayReport {
  std::size_t count = 0;
  double mean_delay = 0.0;
  double median_delay = 0.0;
  double p95_delay = 0.0;
  std::optional<double> mean_ssim;
  std::optional<double> baseline_mean_delay;
  std::optional<double> reduction_pct;  // positive when faster than baseline
  std::string mode;

  std::string describe(const std::string& baseline_name = "baseline") const;
};

// Mean luma SSIM of the receiver's saved decodes (frame_NNNNNN.pgm) against
// the frames the sender used for each logged frame id.
double ssim_from_decodes(const SessionLog& log, const dataset::FrameSet& frames, const std::string& decodes_dir);

// Throws DomainError on an empty log.
DelayReport summarize(const SessionLog& log, const SessionLog* baseline = nullptr,
                      std::optional<double> mean_ssim = std::nullopt);

}  // namespace roiadapt::stream

#include "roiadapt/stream.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <filesystem>
#include <iomanip>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "roiadapt/codec.hpp"
#include "roiadapt/error.hpp"
#include "roiadapt/quality.hpp"
#include "roiadapt/sizemodel.hpp"
#include "roiadapt/textio.hpp"

namespace roiadapt::stream {
namespace {

class ConnectionClosed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  ~Fd() { reset(); }
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  int get() const { return fd_; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

std::string errno_text(const std::string& what) { return what + ": " + std::strerror(errno); }

void write_all(int fd, std::span<const std::uint8_t> data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ConnectionClosed(errno_text("send"));
    }
    off += static_cast<std::size_t>(n);
  }
}

// Returns false on clean EOF before any byte was read.
bool read_exact(int fd, std::uint8_t* out, std::size_t n) {
  std::size_t off = 0;
  while (off < n) {
    const ssize_t r = ::recv(fd, out + off, n - off, 0);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw ConnectionClosed(errno_text("recv"));
    }
    if (r == 0) {
      if (off == 0) return false;
      throw ProtocolError("connection closed mid-message (" + std::to_string(off) + " of " + std::to_string(n) +
                          " bytes)");
    }
    off += static_cast<std::size_t>(r);
  }
  return true;
}

void put_be(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = bytes - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_be(std::span<const std::uint8_t> in, std::size_t pos, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v = (v << 8) | in[pos + static_cast<std::size_t>(i)];
  return v;
}

// Reads one framed message; nullopt on clean EOF.
std::optional<WireMessage> read_message(int fd, std::uint64_t* recv_ts = nullptr) {
  std::vector<std::uint8_t> buf(kWireHeaderBytes);
  if (!read_exact(fd, buf.data(), buf.size())) return std::nullopt;
  const auto len = static_cast<std::size_t>(get_be(buf, 13, 4));
  if (len > (std::size_t{1} << 28)) throw ProtocolError("payload length " + std::to_string(len) + " exceeds limit");
  buf.resize(kWireHeaderBytes + len);
  if (len > 0 && !read_exact(fd, buf.data() + kWireHeaderBytes, len))
    throw ProtocolError("connection closed before payload");
  if (recv_ts) *recv_ts = monotonic_us();
  return WireMessage::parse(buf);
}

sockaddr_in resolve(const Endpoint& ep) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string host = ep.host.empty() ? "0.0.0.0" : ep.host;
  if (const int rc = ::getaddrinfo(host.c_str(), nullptr, &hints, &res); rc != 0)
    throw std::runtime_error("cannot resolve " + host + ": " + ::gai_strerror(rc));
  sockaddr_in addr = *reinterpret_cast<sockaddr_in*>(res->ai_addr);
  ::freeaddrinfo(res);
  addr.sin_port = htons(ep.port);
  return addr;
}

template <typename T>
class Channel {
 public:
  void push(T v) {
    {
      std::lock_guard lock(mu_);
      q_.push_back(std::move(v));
    }
    cv_.notify_one();
  }
  T pop() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !q_.empty(); });
    T v = std::move(q_.front());
    q_.pop_front();
    return v;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<T> q_;
};

// Token bucket refilled every `quantum_s`; starts with one quantum of credit.
void paced_write(int fd, std::span<const std::uint8_t> data, double mbps, double quantum_s) {
  const double bytes_per_quantum = std::max(1.0, mbps * 1e6 / 8.0 * quantum_s);
  const auto start = std::chrono::steady_clock::now();
  const auto quantum = std::chrono::duration<double>(quantum_s);
  std::size_t sent = 0;
  while (sent < data.size()) {
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto quanta = static_cast<std::size_t>(elapsed / quantum_s);
    const auto allowed = static_cast<std::size_t>(bytes_per_quantum * static_cast<double>(quanta + 1));
    if (allowed > sent) {
      const std::size_t chunk = std::min(data.size() - sent, allowed - sent);
      write_all(fd, data.subspan(sent, chunk));
      sent += chunk;
    } else {
      std::this_thread::sleep_until(start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                quantum * static_cast<double>(quanta + 1)));
    }
  }
}

}  // namespace

std::vector<std::uint8_t> WireMessage::serialize() const {
  if (kind != MessageKind::kFrame && !payload.empty()) throw DomainError("only frame messages carry a payload");
  std::vector<std::uint8_t> out;
  out.reserve(kWireHeaderBytes + payload.size());
  out.push_back(static_cast<std::uint8_t>(kind));
  put_be(out, frame_id, 4);
  put_be(out, send_ts_us, 8);
  put_be(out, payload.size(), 4);
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

WireMessage WireMessage::parse(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kWireHeaderBytes) throw ParseError("wire message shorter than header");
  WireMessage m;
  const std::uint8_t kind = bytes[0];
  if (kind < 1 || kind > 3) throw ParseError("unknown wire message kind " + std::to_string(kind));
  m.kind = static_cast<MessageKind>(kind);
  m.frame_id = static_cast<std::uint32_t>(get_be(bytes, 1, 4));
  m.send_ts_us = get_be(bytes, 5, 8);
  const auto len = static_cast<std::size_t>(get_be(bytes, 13, 4));
  if (bytes.size() != kWireHeaderBytes + len) throw ParseError("wire payload length does not match message size");
  if (m.kind != MessageKind::kFrame && len != 0) throw ParseError("non-frame message carries a payload");
  m.payload.assign(bytes.begin() + kWireHeaderBytes, bytes.end());
  return m;
}

std::string format_delay_log(const SessionLog& log) {
  std::ostringstream os;
  if (!log.mode.empty()) os << "# mode=" << log.mode << '\n';
  for (const auto& e : log.errors) os << "# error=" << e << '\n';
  os << "frame_id,bytes,qf,roi_w,roi_h,send_ts_us,recv_ts_us,delay_s\n";
  for (const auto& r : log.records)
    os << r.frame_id << ',' << r.bytes << ',' << r.qf << ',' << r.roi_w << ',' << r.roi_h << ',' << r.send_ts_us << ','
       << r.recv_ts_us << ',' << textio::format_double(r.delay_s) << '\n';
  return os.str();
}

SessionLog parse_delay_log(const std::string& text, const std::string& source) {
  SessionLog log;
  for (const auto& line : textio::split(text, '\n')) {
    if (line.rfind("# mode=", 0) == 0) log.mode = line.substr(7);
    if (line.rfind("# error=", 0) == 0) log.errors.push_back(line.substr(8));
  }
  for (const auto& row : textio::parse_csv(
           text, {"frame_id", "bytes", "qf", "roi_w", "roi_h", "send_ts_us", "recv_ts_us", "delay_s"}, source)) {
    DelayRecord r;
    r.frame_id = static_cast<std::uint32_t>(textio::to_int64(row, 0));
    r.bytes = textio::to_int64(row, 1);
    r.qf = textio::to_int(row, 2);
    r.roi_w = textio::to_int(row, 3);
    r.roi_h = textio::to_int(row, 4);
    r.send_ts_us = static_cast<std::uint64_t>(textio::to_int64(row, 5));
    r.recv_ts_us = static_cast<std::uint64_t>(textio::to_int64(row, 6));
    r.delay_s = textio::to_double(row, 7);
    log.records.push_back(r);
  }
  return log;
}

std::uint64_t monotonic_us() {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now().time_since_epoch())
          .count());
}

Endpoint parse_endpoint(const std::string& host_port) {
  const auto colon = host_port.rfind(':');
  if (colon == std::string::npos) throw DomainError("expected HOST:PORT, got '" + host_port + "'");
  Endpoint ep;
  ep.host = host_port.substr(0, colon);
  const std::string port = host_port.substr(colon + 1);
  int p = -1;
  try {
    std::size_t used = 0;
    p = std::stoi(port, &used);
    if (used != port.size()) p = -1;
  } catch (const std::exception&) {
    p = -1;
  }
  if (p < 0 || p > 65535) throw DomainError("bad port in '" + host_port + "'");
  ep.port = static_cast<std::uint16_t>(p);
  return ep;
}

Receiver::Receiver(const std::string& bind_addr, std::string decodes_dir) : decodes_dir_(std::move(decodes_dir)) {
  const auto addr = resolve(parse_endpoint(bind_addr));
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error(errno_text("socket"));
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(listen_fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) < 0 || ::listen(listen_fd_, 1) < 0) {
    const std::string msg = errno_text("bind/listen " + bind_addr);
    ::close(listen_fd_);
    throw std::runtime_error(msg);
  }
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
  if (!decodes_dir_.empty()) std::filesystem::create_directories(decodes_dir_);
}

Receiver::~Receiver() {
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

SessionLog Receiver::run() {
  Fd conn(::accept(listen_fd_, nullptr, nullptr));
  if (conn.get() < 0) throw std::runtime_error(errno_text("accept"));
  const int one = 1;
  ::setsockopt(conn.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));

  struct Work {
    WireMessage msg;
    std::uint64_t recv_ts = 0;
    bool stop = false;
  };
  Channel<Work> channel;
  SessionLog log;
  log.mode = "one-way send->receive, host monotonic clock";
  std::mutex log_mu;

  std::thread worker([&] {
    while (true) {
      Work w = channel.pop();
      if (w.stop) return;
      DelayRecord r;
      r.frame_id = w.msg.frame_id;
      r.bytes = static_cast<long long>(w.msg.payload.size());
      r.send_ts_us = w.msg.send_ts_us;
      r.recv_ts_us = w.recv_ts;
      r.delay_s = static_cast<double>(static_cast<std::int64_t>(w.recv_ts - w.msg.send_ts_us)) / 1e6;
      std::string error;
      try {
        const auto ef = codec::EncodedFrame::parse(w.msg.payload);
        r.qf = ef.qf;
        r.roi_w = ef.roi.w;
        r.roi_h = ef.roi.h;
        const auto decoded = codec::decode_frame(ef);
        if (!decodes_dir_.empty()) {
          std::ostringstream name;
          name << "frame_" << std::setw(6) << std::setfill('0') << r.frame_id << ".pgm";
          dataset::write_pgm((std::filesystem::path(decodes_dir_) / name.str()).string(), decoded.width,
                             decoded.height, decoded.luma);
        }
      } catch (const std::exception& e) {
        error = "frame " + std::to_string(r.frame_id) + ": decode failed: " + e.what();
      }
      {
        std::lock_guard lock(log_mu);
        log.records.push_back(r);
        if (!error.empty()) log.errors.push_back(error);
      }
      WireMessage ack{MessageKind::kAck, r.frame_id, w.recv_ts, {}};
      try {
        write_all(conn.get(), ack.serialize());
      } catch (const ConnectionClosed&) {
        // sender went away; the reader will notice
      }
    }
  });

  std::optional<std::uint32_t> last_id;
  try {
    while (true) {
      std::uint64_t recv_ts = 0;
      auto msg = read_message(conn.get(), &recv_ts);
      if (!msg) throw ProtocolError("connection closed without end message");
      if (msg->kind == MessageKind::kEnd) break;
      if (msg->kind != MessageKind::kFrame) throw ProtocolError("unexpected message kind from sender");
      if (last_id && msg->frame_id <= *last_id) throw ProtocolError("frame ids not strictly increasing");
      last_id = msg->frame_id;
      channel.push({std::move(*msg), recv_ts, false});
    }
  } catch (const std::exception& e) {
    std::lock_guard lock(log_mu);
    log.protocol_error = true;
    log.errors.push_back(std::string("protocol error: ") + e.what());
  }
  channel.push({{}, 0, true});
  worker.join();
  std::sort(log.records.begin(), log.records.end(),
            [](const DelayRecord& a, const DelayRecord& b) { return a.frame_id < b.frame_id; });
  return log;
}

SessionLog serve_receiver(const std::string& bind_addr, std::string decodes_dir) {
  Receiver r(bind_addr, std::move(decodes_dir));
  return r.run();
}

env::Action preset_action(const std::string& name) {
  if (name == "low") return {0.0, 0.0, 0.0};
  if (name == "high") return {1.0, 1.0, 1.0};
  throw DomainError("unknown preset '" + name + "' (low|high)");
}

SessionLog run_sender(const std::string& connect_addr, const dataset::FrameSet& frames,
                      const traces::ThroughputTrace& trace, const PolicyFn& policy, const SenderOptions& options) {
  if (frames.size() == 0) throw DomainError("sender needs at least one frame");
  const auto addr = resolve(parse_endpoint(connect_addr));
  Fd sock(::socket(AF_INET, SOCK_STREAM, 0));
  if (sock.get() < 0) throw std::runtime_error(errno_text("socket"));
  if (::connect(sock.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) < 0)
    throw std::runtime_error(errno_text("connect " + connect_addr));
  const int one = 1;
  ::setsockopt(sock.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));

  SessionLog log;
  log.mode = std::string(options.pace ? "paced" : "unpaced") + ", " +
             (options.same_host ? "one-way delay from shared monotonic clock" : "RTT/2 (cross-host, approximate)");
  const std::size_t n = options.frame_count ? options.frame_count : frames.size();

  auto bootstrap = [&] {
    const auto& f = frames[0];
    const auto ef = codec::encode_frame(f, f.roi, 100);
    const double t0 = trace.at(0);
    return std::pair{sizemodel::delay_seconds(static_cast<double>(ef.byte_size()), t0),
                     quality::ssim(f, codec::decode_frame(ef)).mean_ssim};
  };
  auto [prev_delay, prev_quality] = bootstrap();

  try {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& frame = frames[i % frames.size()];
      const double mbps = trace.at(i);
      env::StateObs state{prev_delay, prev_quality, mbps, {}};
      state.normalized = {options.bounds.delay.normalize(prev_delay), options.bounds.quality.normalize(prev_quality),
                          options.bounds.throughput.normalize(mbps)};
      const auto [roi, qf] = env::apply_action(frame.roi, frame.width, frame.height, policy(state));
      const auto ef = codec::encode_frame(frame, roi, qf);
      prev_quality = quality::ssim(frame, codec::decode_frame(ef)).mean_ssim;

      WireMessage msg{MessageKind::kFrame, static_cast<std::uint32_t>(i), 0, ef.serialize()};
      msg.send_ts_us = monotonic_us();
      const auto bytes = msg.serialize();
      if (options.pace)
        paced_write(sock.get(), bytes, mbps, options.quantum_s);
      else
        write_all(sock.get(), bytes);

      auto ack = read_message(sock.get());
      const std::uint64_t ack_ts = monotonic_us();
      if (!ack || ack->kind != MessageKind::kAck || ack->frame_id != msg.frame_id)
        throw ProtocolError("missing or mismatched ack for frame " + std::to_string(i));

      DelayRecord r;
      r.frame_id = msg.frame_id;
      r.bytes = static_cast<long long>(ef.byte_size());
      r.qf = qf;
      r.roi_w = roi.w;
      r.roi_h = roi.h;
      r.send_ts_us = msg.send_ts_us;
      r.recv_ts_us = ack->send_ts_us;
      r.delay_s = options.same_host
                      ? static_cast<double>(static_cast<std::int64_t>(ack->send_ts_us - msg.send_ts_us)) / 1e6
                      : static_cast<double>(ack_ts - msg.send_ts_us) / 2e6;
      log.records.push_back(r);
      prev_delay = r.delay_s;
    }
    write_all(sock.get(), WireMessage{MessageKind::kEnd, static_cast<std::uint32_t>(n), monotonic_us(), {}}.serialize());
  } catch (const ConnectionClosed& e) {
    log.protocol_error = true;
    log.errors.push_back(std::string("session error: ") + e.what());
  } catch (const ProtocolError& e) {
    log.protocol_error = true;
    log.errors.push_back(std::string("session error: ") + e.what());
  }
  return log;
}

std::string DelayReport::describe(const std::string& baseline_name) const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "frames=" << count << " mean=" << mean_delay << "s median=" << median_delay << "s p95=" << p95_delay << "s";
  if (mean_ssim) os << " mean_ssim=" << *mean_ssim;
  if (reduction_pct) {
    os << std::setprecision(1) << " | " << std::abs(*reduction_pct) << "% "
       << (*reduction_pct >= 0 ? "reduction" : "increase") << " vs " << baseline_name;
  }
  if (!mode.empty()) os << " [" << mode << "]";
  return os.str();
}

double ssim_from_decodes(const SessionLog& log, const dataset::FrameSet& frames, const std::string& decodes_dir) {
  if (log.records.empty()) throw DomainError("cannot score an empty log");
  if (frames.size() == 0) throw DomainError("no reference frames");
  double sum = 0.0;
  for (const auto& r : log.records) {
    std::ostringstream name;
    name << "frame_" << std::setw(6) << std::setfill('0') << r.frame_id << ".pgm";
    const auto img = dataset::read_image((std::filesystem::path(decodes_dir) / name.str()).string());
    const auto& ref = frames[r.frame_id % frames.size()];
    if (img.channels != 1 || img.width != ref.width || img.height != ref.height)
      throw DomainError(name.str() + ": decode does not match the reference frame size");
    sum += quality::ssim(ref.luma, img.pixels, ref.width, ref.height).mean_ssim;
  }
  return sum / static_cast<double>(log.records.size());
}

DelayReport summarize(const SessionLog& log, const SessionLog* baseline, std::optional<double> mean_ssim) {
  if (log.records.empty()) throw DomainError("cannot summarize an empty delay log");
  std::vector<double> d;
  d.reserve(log.records.size());
  for (const auto& r : log.records) d.push_back(r.delay_s);
  std::sort(d.begin(), d.end());
  DelayReport rep;
  rep.count = d.size();
  double sum = 0.0;
  for (double v : d) sum += v;
  rep.mean_delay = sum / static_cast<double>(d.size());
  const std::size_t mid = d.size() / 2;
  rep.median_delay = d.size() % 2 ? d[mid] : 0.5 * (d[mid - 1] + d[mid]);
  // nearest-rank percentile
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(d.size())));
  rep.p95_delay = d[std::max<std::size_t>(rank, 1) - 1];
  rep.mean_ssim = mean_ssim;
  rep.mode = log.mode;
  if (baseline) {
    const auto base = summarize(*baseline);
    rep.baseline_mean_delay = base.mean_delay;
    rep.reduction_pct = (base.mean_delay - rep.mean_delay) / base.mean_delay * 100.0;
  }
  return rep;
}

}  // namespace roiadapt::stream

#include "roiadapt/traces.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "roiadapt/error.hpp"
#include "roiadapt/textio.hpp"

namespace roiadapt::traces {

ThroughputTrace::ThroughputTrace(std::vector<TraceSample> samples, bool synthetic, SyntheticSource source)
    : samples_(std::move(samples)), synthetic_(synthetic), source_(source) {
  if (samples_.empty()) throw DomainError("trace must contain at least one sample");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!(samples_[i].throughput_mbps > 0.0) || !std::isfinite(samples_[i].throughput_mbps))
      throw DomainError("trace sample " + std::to_string(i) + " has non-positive throughput");
    if (i > 0 && !(samples_[i].t_seconds > samples_[i - 1].t_seconds))
      throw DomainError("trace timestamps not strictly increasing at sample " + std::to_string(i));
  }
  const auto [lo, hi] = std::minmax_element(samples_.begin(), samples_.end(), [](const auto& a, const auto& b) {
    return a.throughput_mbps < b.throughput_mbps;
  });
  min_ = lo->throughput_mbps;
  max_ = hi->throughput_mbps;
}

ThroughputTrace parse_trace(const std::string& text, const std::string& source) {
  const auto rows = textio::parse_csv(text, {"t_seconds", "throughput_mbps"}, source);
  std::vector<TraceSample> samples;
  samples.reserve(rows.size());
  for (const auto& row : rows) {
    TraceSample s{textio::to_double(row, 0), textio::to_double(row, 1)};
    const std::string at = source + ":" + std::to_string(row.line) + ": ";
    if (!(s.throughput_mbps > 0.0)) throw ParseError(at + "throughput must be positive");
    if (!samples.empty() && !(s.t_seconds > samples.back().t_seconds))
      throw ParseError(at + "timestamp not strictly increasing");
    samples.push_back(s);
  }
  if (samples.empty()) throw ParseError(source + ": trace has no samples");

  // A leading "# synthetic ..." comment restores the source tag.
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line) && !line.empty() && line[0] == '#') {
    if (line.rfind("# synthetic ", 0) != 0) continue;
    SyntheticSource src;
    for (const auto& tok : textio::split(line.substr(12), ' ')) {
      const auto kv = textio::split(tok, '=');
      if (kv.size() != 2) throw ParseError(source + ": malformed synthetic tag '" + tok + "'");
      const textio::CsvRow cell{1, {kv[1]}};
      if (kv[0] == "seed") src.seed = static_cast<std::uint64_t>(textio::to_int64(cell, 0));
      else if (kv[0] == "min") src.min_mbps = textio::to_double(cell, 0);
      else if (kv[0] == "max") src.max_mbps = textio::to_double(cell, 0);
      else if (kv[0] == "step_sigma") src.step_sigma = textio::to_double(cell, 0);
    }
    return ThroughputTrace(std::move(samples), true, src);
  }
  return ThroughputTrace(std::move(samples));
}

ThroughputTrace load_trace(const std::string& path) { return parse_trace(textio::read_file(path), path); }

std::string format_trace(const ThroughputTrace& trace) {
  std::ostringstream os;
  if (trace.synthetic()) {
    const auto& s = trace.source();
    os << "# synthetic seed=" << s.seed << " min=" << textio::format_double(s.min_mbps)
       << " max=" << textio::format_double(s.max_mbps) << " step_sigma=" << textio::format_double(s.step_sigma)
       << '\n';
  }
  os << "t_seconds,throughput_mbps\n";
  for (const auto& s : trace.samples())
    os << textio::format_double(s.t_seconds) << ',' << textio::format_double(s.throughput_mbps) << '\n';
  return os.str();
}

void save_trace(const std::string& path, const ThroughputTrace& trace) { textio::write_file(path, format_trace(trace)); }

ThroughputTrace synth_trace(std::uint64_t seed, std::size_t n, double min_mbps, double max_mbps, double step_sigma) {
  if (n == 0) throw DomainError("synthetic trace length must be positive");
  if (!(min_mbps > 0.0) || !(max_mbps >= min_mbps)) throw DomainError("synthetic trace bounds must satisfy 0 < min <= max");
  if (!(step_sigma >= 0.0)) throw DomainError("step_sigma must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> step(0.0, 1.0);
  const double span = max_mbps - min_mbps;
  double x = min_mbps + span / 2.0;
  std::vector<TraceSample> samples;
  samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    samples.push_back({static_cast<double>(i), x});
    if (step_sigma > 0.0 && span > 0.0) {
      x += step_sigma * step(rng);
      // Reflect at the walls; the loop handles steps wider than the band.
      while (x < min_mbps || x > max_mbps) x = x < min_mbps ? 2 * min_mbps - x : 2 * max_mbps - x;
    }
  }
  return ThroughputTrace(std::move(samples), true, {seed, min_mbps, max_mbps, step_sigma});
}

}  // namespace roiadapt::traces

#include "roiadapt/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "roiadapt/codec.hpp"
#include "roiadapt/error.hpp"
#include "roiadapt/svg.hpp"
#include "roiadapt/textio.hpp"
#include "roiadapt/toy_env.hpp"

namespace roiadapt::harness {
namespace {

using nlohmann::json;

std::vector<std::string> split_key(const std::string& dotted) {
  auto parts = textio::split(dotted, '.');
  for (const auto& p : parts)
    if (p.empty()) throw DomainError("malformed config key '" + dotted + "'");
  return parts;
}

bool same_kind(const json& a, const json& b) {
  if (a.is_null() || b.is_null()) return true;
  if (a.is_number() && b.is_number()) return true;
  return a.type() == b.type();
}

void merge_into(json& dst, const json& src, const std::string& path) {
  if (!src.is_object()) throw DomainError("config section '" + path + "' must be an object");
  for (const auto& [key, value] : src.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!dst.contains(key)) throw DomainError("unknown config key '" + here + "'");
    json& slot = dst[key];
    if (slot.is_object()) {
      merge_into(slot, value, here);
    } else {
      if (!same_kind(slot, value)) throw DomainError("config key '" + here + "' has the wrong type");
      slot = value;
    }
  }
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

double mean_of(const std::vector<env::EpisodeLogRow>& rows, double env::EpisodeLogRow::*field) {
  double s = 0.0;
  for (const auto& r : rows) s += r.*field;
  return rows.empty() ? 0.0 : s / static_cast<double>(rows.size());
}

double pct_reduction(double base, double value) { return base == 0.0 ? 0.0 : (base - value) / base * 100.0; }

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

env::Bounds bounds_pair(const json& j, const std::string& name) {
  if (!j.is_array() || j.size() != 2) throw DomainError("env.bounds." + name + " must be [min, max]");
  env::Bounds b{j[0].get<double>(), j[1].get<double>()};
  if (!(b.max > b.min)) throw DomainError("env.bounds." + name + " must satisfy min < max");
  return b;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RunConfig RunConfig::defaults() {
  const sac::SacHyperParams hp;
  RunConfig c;
  c.doc = {
      {"out_dir", ""},
      {"frames",
       {{"dir", ""},
        {"annotations", ""},
        {"chroma", false},
        {"synth", {{"seed", 7}, {"count", 50}, {"width", 320}, {"height", 240}}}}},
      {"trace",
       {{"path", ""},
        {"synth",
         {{"seed", 11},
          {"length", 1000},
          {"min_mbps", traces::kPaperMinMbps},
          {"max_mbps", traces::kPaperMaxMbps},
          {"sigma", 0.5}}}}},
      {"model", ""},
      {"checkpoint", ""},
      {"fit", {{"samples", 500}, {"seed", 3}}},
      {"env", {{"size_mode", "regression"}, {"reward", "min-delay-max-quality"}, {"threshold", nullptr},
               {"w_delay", 0.5}, {"w_quality", 0.5}, {"episode_length", 0},
               {"bounds", bounds_json(env::NormalizationBounds{})}}},
      {"train", {{"env", "roi"}, {"toy_target", 0.3}, {"toy_episode_length", 10}}},
      {"sac", sac::to_json(hp)},
      {"eval", {{"episodes", 4}, {"size_mode", "measured"}, {"threads", true}}},
  };
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  RunConfig c = defaults();
  json j;
  try {
    j = json::parse(textio::read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  merge_into(c.doc, j, "");
  return c;
}

void RunConfig::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw DomainError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  const auto parts = split_key(key);
  json patch = value;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
  merge_into(doc, patch, "");
}

const json& RunConfig::at(const std::string& dotted) const {
  const json* cur = &doc;
  for (const auto& p : split_key(dotted)) {
    if (!cur->is_object() || !cur->contains(p)) throw DomainError("missing config key '" + dotted + "'");
    cur = &(*cur)[p];
  }
  return *cur;
}

std::string RunConfig::str(const std::string& dotted) const { return at(dotted).get<std::string>(); }

void RunConfig::validate() const {
  auto must_exist = [&](const std::string& key) {
    const auto p = str(key);
    if (!p.empty() && !fs::exists(p)) throw DomainError(key + ": path '" + p + "' does not exist");
  };
  for (const char* k : {"frames.dir", "frames.annotations", "trace.path", "model", "checkpoint"}) must_exist(k);
  if (!str("frames.dir").empty() && str("frames.annotations").empty())
    throw DomainError("frames.annotations is required with frames.dir");
  env::size_mode_from_string(str("env.size_mode"));
  env::size_mode_from_string(str("eval.size_mode"));
  env::reward_preset_from_string(str("env.reward"));
  bounds_from_config(*this);
  const auto kind = str("train.env");
  if (kind != "roi" && kind != "toy") throw DomainError("train.env must be roi or toy");
  if (at("fit.samples").get<long long>() < 10) throw DomainError("fit.samples must be at least 10");
  if (at("eval.episodes").get<long long>() < 1) throw DomainError("eval.episodes must be positive");
  hyperparams_from_config(*this).validate();
}

std::string RunConfig::hash() const {
  json canon = doc;
  canon.erase("out_dir");
  return hex64(fnv1a64(canon.dump()));
}

nlohmann::json RunConfig::seeds() const {
  return {{"frames", at("frames.synth.seed")},
          {"trace", at("trace.synth.seed")},
          {"fit", at("fit.seed")},
          {"sac", at("sac.seed")}};
}

std::string RunConfig::stamp() const {
  const auto s = seeds();
  std::ostringstream os;
  os << "config_hash=" << hash() << " seeds=frames:" << s["frames"] << ",trace:" << s["trace"]
     << ",fit:" << s["fit"] << ",sac:" << s["sac"];
  return os.str();
}

fs::path make_run_dir(const RunConfig& cfg, const std::string& command) {
  fs::path dir = cfg.str("out_dir");
  if (dir.empty()) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &utc);
    const fs::path base = fs::path("runs") / (std::string(buf) + "-" + command);
    dir = base;
    for (int k = 1; fs::exists(dir); ++k) dir = base.string() + "-" + std::to_string(k);
  }
  fs::create_directories(dir);
  return dir;
}

dataset::FrameSet frames_from_config(const RunConfig& cfg) {
  if (!cfg.str("frames.dir").empty())
    return dataset::load_frames(cfg.str("frames.dir"), cfg.str("frames.annotations"),
                                cfg.at("frames.chroma").get<bool>());
  return dataset::synth_frames(cfg.at("frames.synth.seed").get<std::uint64_t>(),
                               cfg.at("frames.synth.count").get<std::size_t>(), cfg.at("frames.synth.width").get<int>(),
                               cfg.at("frames.synth.height").get<int>());
}

traces::ThroughputTrace trace_from_config(const RunConfig& cfg) {
  if (!cfg.str("trace.path").empty()) return traces::load_trace(cfg.str("trace.path"));
  return traces::synth_trace(cfg.at("trace.synth.seed").get<std::uint64_t>(),
                             cfg.at("trace.synth.length").get<std::size_t>(),
                             cfg.at("trace.synth.min_mbps").get<double>(), cfg.at("trace.synth.max_mbps").get<double>(),
                             cfg.at("trace.synth.sigma").get<double>());
}

nlohmann::json bounds_json(const env::NormalizationBounds& b) {
  return {{"throughput", {b.throughput.min, b.throughput.max}},
          {"delay", {b.delay.min, b.delay.max}},
          {"quality", {b.quality.min, b.quality.max}}};
}

env::NormalizationBounds bounds_from_config(const RunConfig& cfg) {
  const auto& j = cfg.at("env.bounds");
  env::NormalizationBounds b;
  b.throughput = bounds_pair(j.at("throughput"), "throughput");
  b.delay = bounds_pair(j.at("delay"), "delay");
  b.quality = bounds_pair(j.at("quality"), "quality");
  return b;
}

env::EnvConfig env_config_from_config(const RunConfig& cfg) {
  env::EnvConfig c;
  c.size_mode = env::size_mode_from_string(cfg.str("env.size_mode"));
  c.reward.preset = env::reward_preset_from_string(cfg.str("env.reward"));
  if (!cfg.at("env.threshold").is_null()) c.reward.threshold = cfg.at("env.threshold").get<double>();
  c.reward.w_delay = cfg.at("env.w_delay").get<double>();
  c.reward.w_quality = cfg.at("env.w_quality").get<double>();
  c.bounds = bounds_from_config(cfg);
  c.episode_length = cfg.at("env.episode_length").get<std::size_t>();
  return c;
}

sac::SacHyperParams hyperparams_from_config(const RunConfig& cfg) {
  return sac::hyperparams_from_json(cfg.at("sac"));
}

std::vector<sizemodel::SizeSample> collect_size_samples(const dataset::FrameSet& frames, std::size_t n,
                                                        std::uint64_t seed) {
  if (frames.size() == 0) throw DomainError("cannot sample sizes from an empty frame set");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, frames.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<sizemodel::SizeSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& f = frames[pick(rng)];
    env::Action a;
    a.x_grow = unit(rng);
    a.y_grow = unit(rng);
    a.qf_norm = unit(rng);
    const auto [roi, qf] = env::apply_action(codec::snap_outward(f.roi, f.width, f.height), f.width, f.height, a);
    const auto enc = codec::encode_frame(f, roi, qf);
    out.push_back({roi.w, roi.h, qf, static_cast<long long>(enc.byte_size())});
  }
  return out;
}

FitArtifacts cmd_fit(const RunConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  const auto frames = frames_from_config(cfg);
  FitArtifacts a;
  a.samples = collect_size_samples(frames, cfg.at("fit.samples").get<std::size_t>(), cfg.at("fit.seed").get<std::uint64_t>());
  a.model = sizemodel::fit_polynomial(a.samples);
  a.samples_csv = out_dir / "samples.csv";
  a.model_json = out_dir / "model.json";
  sizemodel::save_samples(a.samples_csv.string(), a.samples, cfg.stamp());
  sizemodel::save_model(a.model_json.string(), a.model,
                        {{"config_hash", cfg.hash()}, {"seeds", cfg.seeds()}, {"frames", frames.origin},
                         {"samples", "samples.csv"}});
  return a;
}

stream::PolicyFn policy_fn(const sac::TrainedPolicy& p) {
  auto shared = std::make_shared<const sac::TrainedPolicy>(p);
  return [shared](const env::StateObs& s) {
    return env::RoiEnvAdapter::to_env_action(shared->act({s.normalized.begin(), s.normalized.end()}));
  };
}

stream::PolicyFn make_policy(const std::string& name, const RunConfig& cfg,
                             const std::shared_ptr<const sac::TrainedPolicy>& trained) {
  if (name == "low" || name == "high") {
    const auto a = stream::preset_action(name);
    return [a](const env::StateObs&) { return a; };
  }
  if (name != "checkpoint") throw DomainError("unknown policy '" + name + "' (checkpoint|low|high)");
  if (trained) return policy_fn(*trained);
  if (cfg.str("checkpoint").empty()) throw DomainError("policy 'checkpoint' needs a checkpoint path");
  return policy_fn(sac::load_checkpoint(cfg.str("checkpoint")));
}

std::string baseline_definitions() {
  return "low = fixed action (0,0,0): annotated ROI only, background at qf 1; "
         "high = fixed action (1,1,1): full-frame ROI (no lossy area), qf 100";
}

TrainArtifacts cmd_train(const RunConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  const auto hp = hyperparams_from_config(cfg);
  TrainArtifacts t;
  json extra = {{"config_hash", cfg.hash()}, {"seeds", cfg.seeds()}};

  if (cfg.str("train.env") == "toy") {
    const double target = cfg.at("train.toy_target").get<double>();
    const auto len = cfg.at("train.toy_episode_length").get<std::size_t>();
    rl::ToyTargetEnv env(target, len), eval_env(target, len);
    auto result = sac::train(env, &eval_env, hp);
    t.policy = {result.agent.policy, hp, nullptr, hp.seed};
    t.curve = std::move(result.curve);
    extra["env"] = "toy";
  } else {
    const auto frames = frames_from_config(cfg);
    const auto trace = trace_from_config(cfg);
    const auto env_cfg = env_config_from_config(cfg);
    std::optional<sizemodel::PolynomialModel> model;
    std::shared_ptr<const env::QualityTable> table;
    if (env_cfg.size_mode == env::SizeMode::kRegression) {
      if (!cfg.str("model").empty()) {
        model = sizemodel::load_model(cfg.str("model"));
      } else {
        t.fit = cmd_fit(cfg, out_dir);
        model = t.fit->model;
      }
      table = std::make_shared<const env::QualityTable>(frames);
    }
    const auto* mp = model ? &*model : nullptr;
    env::RoiEnv train_env(frames, trace, env_cfg, mp, table);
    env::RoiEnv eval_env(frames, trace, env_cfg, mp, table);
    env::RoiEnvAdapter train_adapter(train_env);
    env::RoiEnvAdapter eval_adapter(eval_env, false);
    auto result = sac::train(train_adapter, &eval_adapter, hp);
    t.policy = {result.agent.policy, hp, bounds_json(env_cfg.bounds), hp.seed};
    t.curve = std::move(result.curve);
    extra["env"] = "roi";
    extra["reward"] = env::to_string(env_cfg.reward.preset);
    extra["size_mode"] = env::to_string(env_cfg.size_mode);
    extra["frames"] = frames.origin;
  }

  t.checkpoint = out_dir / "checkpoint.json";
  t.curve_csv = out_dir / "curve.csv";
  t.curve_svg = out_dir / "curve.svg";
  sac::save_checkpoint(t.checkpoint.string(), t.policy, extra);
  textio::write_file(t.curve_csv.string(), sac::format_curve(t.curve, cfg.stamp()));

  svg::Series raw{"episode reward", {}, {}};
  for (const auto& p : t.curve) {
    raw.x.push_back(static_cast<double>(p.step));
    raw.y.push_back(p.reward);
  }
  svg::Series smoothed{"10-episode mean", raw.x, sac::smooth(raw.y, 10)};
  if (!t.curve.empty())
    textio::write_file(t.curve_svg.string(),
                       svg::line_chart("Learning curve", "environment step", "episode reward", {raw, smoothed},
                                       cfg.stamp()));
  return t;
}

PolicyEval replay_policy(const std::string& name, const stream::PolicyFn& policy, const dataset::FrameSet& frames,
                         const traces::ThroughputTrace& trace, const env::EnvConfig& env_cfg, std::size_t episodes,
                         const sizemodel::PolynomialModel* model, std::shared_ptr<const env::QualityTable> table) {
  env::RoiEnv env(frames, trace, env_cfg, model, std::move(table));
  PolicyEval out;
  out.name = name;
  std::size_t step = 0;
  for (std::size_t e = 0; e < episodes; ++e) {
    auto state = env.reset(e * env.episode_length());
    for (bool done = false; !done;) {
      const auto o = env.step(policy(state));
      out.rows.push_back(env::log_row(step++, o));
      state = o.next_state;
      done = o.done;
    }
  }
  out.mean_delay = mean_of(out.rows, &env::EpisodeLogRow::delay_s);
  out.mean_ssim = mean_of(out.rows, &env::EpisodeLogRow::ssim);
  out.mean_reward = mean_of(out.rows, &env::EpisodeLogRow::reward);
  double bytes = 0.0;
  for (const auto& r : out.rows) bytes += static_cast<double>(r.bytes);
  out.mean_bytes = out.rows.empty() ? 0.0 : bytes / static_cast<double>(out.rows.size());
  return out;
}

PolicyEval replay_policy(const std::string& name, const stream::PolicyFn& policy, const dataset::FrameSet& frames,
                         const traces::ThroughputTrace& trace, const env::EnvConfig& env_cfg, std::size_t episodes) {
  if (env_cfg.size_mode != env::SizeMode::kMeasured) throw DomainError("regression replay needs a size model");
  return replay_policy(name, policy, frames, trace, env_cfg, episodes, nullptr, nullptr);
}

EvalArtifacts cmd_eval(const RunConfig& cfg, const fs::path& out_dir, const std::vector<std::string>& policies,
                       const std::shared_ptr<const sac::TrainedPolicy>& trained) {
  cfg.validate();
  if (policies.empty()) throw DomainError("eval needs at least one policy");
  const auto frames = frames_from_config(cfg);
  const auto trace = trace_from_config(cfg);
  auto env_cfg = env_config_from_config(cfg);
  env_cfg.size_mode = env::size_mode_from_string(cfg.str("eval.size_mode"));
  const auto episodes = cfg.at("eval.episodes").get<std::size_t>();

  std::optional<sizemodel::PolynomialModel> model;
  std::shared_ptr<const env::QualityTable> table;
  if (env_cfg.size_mode == env::SizeMode::kRegression) {
    if (cfg.str("model").empty()) throw DomainError("eval.size_mode=regression needs a model path");
    model = sizemodel::load_model(cfg.str("model"));
    table = std::make_shared<const env::QualityTable>(frames);
  }
  const auto* mp = model ? &*model : nullptr;

  std::vector<stream::PolicyFn> fns;
  for (const auto& name : policies) fns.push_back(make_policy(name, cfg, trained));

  EvalArtifacts art;
  art.policies.resize(policies.size());
  std::vector<std::exception_ptr> errors(policies.size());
  auto run_one = [&](std::size_t i) {
    try {
      art.policies[i] = replay_policy(policies[i], fns[i], frames, trace, env_cfg, episodes, mp, table);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (cfg.at("eval.threads").get<bool>()) {
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < policies.size(); ++i) workers.emplace_back(run_one, i);
    for (auto& w : workers) w.join();
  } else {
    for (std::size_t i = 0; i < policies.size(); ++i) run_one(i);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  const std::string stamp = cfg.stamp();
  const auto& b = env_cfg.bounds;
  std::vector<svg::Series> delay_series;
  std::vector<svg::Bar> ssim_bars, delay_bars;
  for (const auto& p : art.policies) {
    textio::write_file((out_dir / ("eval_" + p.name + ".csv")).string(), env::format_episode_log(p.rows, stamp));

    std::ostringstream norm;
    norm << "# " << stamp << '\n' << "step,throughput,delay,quality\n";
    svg::Series st{"throughput", {}, {}}, sd{"delay", {}, {}}, sq{"quality", {}, {}};
    svg::Series raw_delay{p.name, {}, {}};
    for (const auto& r : p.rows) {
      const double x = static_cast<double>(r.step);
      const double nt = b.throughput.normalize(r.throughput_mbps);
      const double nd = b.delay.normalize(r.delay_s);
      const double nq = b.quality.normalize(r.ssim);
      norm << r.step << ',' << textio::format_double(nt) << ',' << textio::format_double(nd) << ','
           << textio::format_double(nq) << '\n';
      st.x.push_back(x), st.y.push_back(nt);
      sd.x.push_back(x), sd.y.push_back(nd);
      sq.x.push_back(x), sq.y.push_back(nq);
      raw_delay.x.push_back(x), raw_delay.y.push_back(r.delay_s);
    }
    textio::write_file((out_dir / ("normalized_" + p.name + ".csv")).string(), norm.str());
    textio::write_file((out_dir / ("dtq_" + p.name + ".svg")).string(),
                       svg::line_chart("Throughput, delay and quality (" + p.name + ")", "step", "normalized value",
                                       {st, sd, sq}, stamp));
    delay_series.push_back(std::move(raw_delay));
    ssim_bars.push_back({p.name, p.mean_ssim});
    delay_bars.push_back({p.name, p.mean_delay});
  }
  textio::write_file((out_dir / "delay_comparison.svg").string(),
                     svg::line_chart("Per-frame delay", "step", "delay (s)", delay_series, stamp));
  textio::write_file((out_dir / "quality_bars.svg").string(),
                     svg::bar_chart("Mean SSIM", "SSIM", ssim_bars, stamp));
  textio::write_file((out_dir / "delay_bars.svg").string(),
                     svg::bar_chart("Mean delay", "delay (s)", delay_bars, stamp));

  json s;
  s["config_hash"] = cfg.hash();
  s["seeds"] = cfg.seeds();
  s["baselines"] = baseline_definitions();
  s["delay_definition"] = "encoded frame bits / trace throughput";
  s["bounds"] = bounds_json(b);
  s["reward"] = env::to_string(env_cfg.reward.preset);
  s["size_mode"] = env::to_string(env_cfg.size_mode);
  s["episodes"] = episodes;
  s["steps"] = art.policies.front().rows.size();
  for (const auto& p : art.policies)
    s["policies"][p.name] = {{"mean_delay_s", p.mean_delay},
                             {"mean_ssim", p.mean_ssim},
                             {"mean_reward", p.mean_reward},
                             {"mean_bytes", p.mean_bytes}};
  for (const auto& p : art.policies)
    for (const auto& base : art.policies) {
      if (base.name == p.name || (base.name != "low" && base.name != "high")) continue;
      s["deltas"][p.name]["delay_reduction_vs_" + base.name + "_pct"] = pct_reduction(base.mean_delay, p.mean_delay);
      s["deltas"][p.name]["ssim_change_vs_" + base.name + "_pct"] =
          base.mean_ssim == 0.0 ? 0.0 : (p.mean_ssim - base.mean_ssim) / base.mean_ssim * 100.0;
    }
  art.summary = s;
  art.summary_json = out_dir / "summary.json";
  art.summary_md = out_dir / "summary.md";
  textio::write_file(art.summary_json.string(), s.dump(2) + "\n");

  std::ostringstream md;
  md << "# Evaluation summary\n\n"
     << "- " << stamp << "\n"
     << "- baselines: " << baseline_definitions() << "\n"
     << "- delay: " << s["delay_definition"].get<std::string>() << "\n"
     << "- size mode: " << s["size_mode"].get<std::string>() << ", reward: " << s["reward"].get<std::string>()
     << "\n"
     << "- bounds: throughput [" << b.throughput.min << ", " << b.throughput.max << "] Mb/s, delay ["
     << b.delay.min << ", " << b.delay.max << "] s, quality [" << b.quality.min << ", " << b.quality.max << "]\n"
     << "- " << episodes << " episodes, " << art.policies.front().rows.size() << " steps per policy\n\n"
     << "| policy | mean delay (s) | mean SSIM | mean bytes | delay vs high | delay vs low |\n"
     << "|---|---|---|---|---|---|\n";
  for (const auto& p : art.policies) {
    auto delta = [&](const std::string& base) -> std::string {
      const auto& d = s["deltas"];
      const std::string key = "delay_reduction_vs_" + base + "_pct";
      if (!d.contains(p.name) || !d[p.name].contains(key)) return "-";
      const double v = d[p.name][key].get<double>();
      return fixed(std::abs(v), 1) + (v >= 0 ? "% lower" : "% higher");
    };
    md << "| " << p.name << " | " << fixed(p.mean_delay, 4) << " | " << fixed(p.mean_ssim, 4) << " | "
       << fixed(p.mean_bytes, 0) << " | " << delta("high") << " | " << delta("low") << " |\n";
  }
  textio::write_file(art.summary_md.string(), md.str());
  return art;
}

std::vector<double> Table::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw DomainError("no column '" + name + "'");
  const auto k = static_cast<std::size_t>(it - columns.begin());
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[k]);
  return out;
}

Table read_table(const std::string& path) {
  const auto text = textio::read_file(path);
  Table t;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = textio::split(line, ',');
    if (t.columns.empty()) {
      t.columns = std::move(fields);
      continue;
    }
    if (fields.size() != t.columns.size())
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.columns.size()) +
                       " fields");
    textio::CsvRow row{lineno, std::move(fields)};
    std::vector<double> values;
    for (std::size_t i = 0; i < row.fields.size(); ++i) values.push_back(textio::to_double(row, i));
    t.rows.push_back(std::move(values));
  }
  if (t.columns.empty()) throw DomainError(path + ": CSV is empty");
  return t;
}

void cmd_report(const std::string& csv, const std::string& x_column, const std::vector<std::string>& y_columns,
                const std::string& kind, const std::string& out, const std::string& title) {
  const auto t = read_table(csv);
  if (t.rows.empty()) throw DomainError(csv + ": CSV has no data rows");
  std::vector<std::string> ys = y_columns;
  if (ys.empty())
    for (const auto& c : t.columns)
      if (c != x_column) ys.push_back(c);
  const std::string name = title.empty() ? fs::path(csv).filename().string() : title;
  const std::string comment = "source=" + fs::path(csv).filename().string();
  if (kind == "line") {
    std::vector<double> x;
    if (x_column.empty()) {
      x.resize(t.rows.size());
      std::iota(x.begin(), x.end(), 0.0);
    } else {
      x = t.column(x_column);
    }
    std::vector<svg::Series> series;
    for (const auto& y : ys) series.push_back({y, x, t.column(y)});
    textio::write_file(out, svg::line_chart(name, x_column.empty() ? "row" : x_column, "value", series, comment));
  } else if (kind == "bar") {
    std::vector<svg::Bar> bars;
    for (const auto& y : ys) {
      const auto v = t.column(y);
      bars.push_back({y, std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size())});
    }
    textio::write_file(out, svg::bar_chart(name, "mean", bars, comment));
  } else {
    throw DomainError("unknown chart kind '" + kind + "' (line|bar)");
  }
}

void write_manifest(const fs::path& out_dir, const std::string& command, const RunConfig& cfg,
                    const std::vector<fs::path>& artifacts) {
  json m;
  m["command"] = command;
  m["config_hash"] = cfg.hash();
  m["seeds"] = cfg.seeds();
  m["config"] = cfg.doc;
  m["artifacts"] = json::array();
  for (const auto& a : artifacts) m["artifacts"].push_back(a.filename().string());
  textio::write_file((out_dir / "manifest.json").string(), m.dump(2) + "\n");
}

}  // namespace roiadapt::harness

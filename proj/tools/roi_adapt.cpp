#include <exception>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "roiadapt/error.hpp"
#include "roiadapt/harness.hpp"
#include "roiadapt/sac.hpp"
#include "roiadapt/stream.hpp"
#include "roiadapt/textio.hpp"
#include "roiadapt/traces.hpp"

namespace fs = std::filesystem;
using namespace roiadapt;

namespace {

struct ConfigArgs {
  std::string file;
  std::vector<std::string> sets;
  std::string out;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", file, "JSON run config")->check(CLI::ExistingFile);
    cmd->add_option("--set", sets, "override, e.g. --set sac.total_steps=2000")->take_all();
    cmd->add_option("--out", out, "output directory (default runs/<timestamp>-<command>)");
  }

  harness::RunConfig load() const {
    auto cfg = file.empty() ? harness::RunConfig::defaults() : harness::RunConfig::from_file(file);
    for (const auto& s : sets) cfg.set(s);
    if (!out.empty()) cfg.doc["out_dir"] = out;
    return cfg;
  }
};

void print_artifacts(const fs::path& dir) {
  std::cout << "artifacts in " << dir.string() << "\n";
}

std::vector<fs::path> list_dir(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "manifest.json") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ROI-preserving adaptive frame compression: fit, train, evaluate, stream"};
  app.require_subcommand(1);

  // fit
  ConfigArgs fit_args;
  auto* fit = app.add_subcommand("fit", "sample random ROI/QF encodes and fit the frame-size surface");
  fit_args.attach(fit);

  // train
  ConfigArgs train_args;
  bool toy = false;
  auto* train = app.add_subcommand("train", "train the SAC agent; writes checkpoint, curve CSV and SVG");
  train_args.attach(train);
  train->add_flag("--toy", toy, "train on the one-dimensional toy task instead");

  // eval
  ConfigArgs eval_args;
  std::vector<std::string> eval_policies = {"checkpoint", "low", "high"};
  std::string eval_ckpt;
  auto* eval = app.add_subcommand("eval", "replay frames and trace under each policy and compare");
  eval_args.attach(eval);
  eval->add_option("--policy", eval_policies, "policies to compare (checkpoint|low|high)")->take_all();
  eval->add_option("--checkpoint", eval_ckpt, "policy checkpoint JSON")->check(CLI::ExistingFile);

  // report
  std::string rep_csv, rep_x, rep_kind = "line", rep_out, rep_title;
  std::vector<std::string> rep_y;
  auto* report = app.add_subcommand("report", "render a CSV as an SVG line or bar chart");
  report->add_option("--csv", rep_csv, "input CSV")->required();
  report->add_option("--x", rep_x, "x column (line charts; default row index)");
  report->add_option("--y", rep_y, "y columns (default all others)")->take_all();
  report->add_option("--kind", rep_kind, "line|bar")->check(CLI::IsMember({"line", "bar"}));
  report->add_option("--out", rep_out, "output SVG")->required();
  report->add_option("--title", rep_title, "chart title");

  // trace
  auto* trace = app.add_subcommand("trace", "synthesize or validate throughput traces");
  trace->require_subcommand(1);
  std::uint64_t tr_seed = 11;
  std::size_t tr_len = 1000;
  double tr_min = traces::kPaperMinMbps, tr_max = traces::kPaperMaxMbps, tr_sigma = 0.5;
  std::string tr_out, tr_in;
  auto* tsynth = trace->add_subcommand("synth", "write a reflected random-walk trace");
  tsynth->add_option("--seed", tr_seed);
  tsynth->add_option("--length", tr_len);
  tsynth->add_option("--min", tr_min, "Mb/s");
  tsynth->add_option("--max", tr_max, "Mb/s");
  tsynth->add_option("--sigma", tr_sigma, "per-step standard deviation, Mb/s");
  tsynth->add_option("--out", tr_out)->required();
  auto* tvalidate = trace->add_subcommand("validate", "parse a trace CSV and print its range");
  tvalidate->add_option("trace", tr_in)->required()->check(CLI::ExistingFile);

  // stream
  auto* stream_cmd = app.add_subcommand("stream", "socket sender/receiver delay experiment");
  stream_cmd->require_subcommand(1);
  std::string recv_bind, recv_out, recv_decodes;
  auto* recv = stream_cmd->add_subcommand("recv", "accept one session, decode, ack, log delays");
  recv->add_option("--bind", recv_bind, "HOST:PORT")->required();
  recv->add_option("--out", recv_out, "delay log CSV")->required();
  recv->add_option("--decodes", recv_decodes, "directory for decoded frames (PGM)");

  ConfigArgs send_args;
  std::string send_to, send_frames, send_ann, send_trace, send_policy = "high", send_log;
  bool send_pace = true, cross_host = false;
  std::size_t send_count = 0;
  auto* send = stream_cmd->add_subcommand("send", "encode frames under a policy and transmit them");
  send_args.attach(send);
  send->add_option("--to", send_to, "HOST:PORT")->required();
  send->add_option("--frames", send_frames, "frame directory (default: synthetic corpus from config)");
  send->add_option("--annotations", send_ann, "ROI annotations CSV for --frames");
  send->add_option("--trace", send_trace, "throughput trace CSV (default: synthetic from config)");
  send->add_option("--policy", send_policy, "checkpoint path, low, or high");
  send->add_flag("--pace,!--no-pace", send_pace, "throttle writes to the trace throughput");
  send->add_flag("--cross-host", cross_host, "report RTT/2 instead of one-way delay");
  send->add_option("--count", send_count, "frames to send (default one pass)");
  send->add_option("--log", send_log, "sender-side delay log CSV");

  std::string sum_log, sum_base, sum_name = "baseline", sum_decodes;
  ConfigArgs sum_args;
  auto* summ = stream_cmd->add_subcommand("summarize", "delay statistics, optionally against a baseline log");
  sum_args.attach(summ);
  summ->add_option("--log", sum_log)->required()->check(CLI::ExistingFile);
  summ->add_option("--baseline", sum_base)->check(CLI::ExistingFile);
  summ->add_option("--baseline-name", sum_name);
  summ->add_option("--decodes", sum_decodes, "receiver decode directory for offline SSIM");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) {
      const auto cfg = fit_args.load();
      const auto dir = harness::make_run_dir(cfg, "fit");
      const auto a = harness::cmd_fit(cfg, dir);
      harness::write_manifest(dir, "fit", cfg, list_dir(dir));
      std::cout << "fitted " << a.samples.size() << " samples, R^2 = " << a.model.r_squared << "\n";
      print_artifacts(dir);
    } else if (train->parsed()) {
      auto cfg = train_args.load();
      if (toy) cfg.set("train.env=\"toy\"");
      const auto dir = harness::make_run_dir(cfg, "train");
      const auto t = harness::cmd_train(cfg, dir);
      harness::write_manifest(dir, "train", cfg, list_dir(dir));
      if (!t.curve.empty())
        std::cout << t.curve.size() << " episodes, last evaluation return " << t.curve.back().reward << "\n";
      if (t.fit) std::cout << "fitted size model inline, R^2 = " << t.fit->model.r_squared << "\n";
      print_artifacts(dir);
    } else if (eval->parsed()) {
      auto cfg = eval_args.load();
      if (!eval_ckpt.empty()) cfg.doc["checkpoint"] = eval_ckpt;
      const auto dir = harness::make_run_dir(cfg, "eval");
      const auto e = harness::cmd_eval(cfg, dir, eval_policies);
      harness::write_manifest(dir, "eval", cfg, list_dir(dir));
      std::cout << textio::read_file(e.summary_md.string());
      print_artifacts(dir);
    } else if (report->parsed()) {
      harness::cmd_report(rep_csv, rep_x, rep_y, rep_kind, rep_out, rep_title);
      std::cout << "wrote " << rep_out << "\n";
    } else if (tsynth->parsed()) {
      traces::save_trace(tr_out, traces::synth_trace(tr_seed, tr_len, tr_min, tr_max, tr_sigma));
      std::cout << "wrote " << tr_out << "\n";
    } else if (tvalidate->parsed()) {
      const auto t = traces::load_trace(tr_in);
      std::cout << t.size() << " samples, " << t.min_mbps() << " to " << t.max_mbps() << " Mb/s"
                << (t.synthetic() ? " (synthetic)" : "") << "\n";
    } else if (recv->parsed()) {
      stream::Receiver r(recv_bind, recv_decodes);
      std::cerr << "listening on port " << r.port() << "\n";
      const auto log = r.run();
      textio::write_file(recv_out, stream::format_delay_log(log));
      std::cout << log.records.size() << " frames received\n";
      for (const auto& err : log.errors) std::cerr << err << "\n";
      return log.protocol_error ? 2 : 0;
    } else if (send->parsed()) {
      auto cfg = send_args.load();
      if (!send_frames.empty()) {
        cfg.doc["frames"]["dir"] = send_frames;
        cfg.doc["frames"]["annotations"] = send_ann;
      }
      if (!send_trace.empty()) cfg.doc["trace"]["path"] = send_trace;
      std::string name = send_policy;
      if (name != "low" && name != "high") {
        cfg.doc["checkpoint"] = send_policy;
        name = "checkpoint";
      }
      cfg.validate();
      const auto frames = harness::frames_from_config(cfg);
      const auto tr = harness::trace_from_config(cfg);
      stream::SenderOptions opt;
      opt.pace = send_pace;
      opt.same_host = !cross_host;
      opt.frame_count = send_count;
      opt.bounds = harness::bounds_from_config(cfg);
      const auto log = stream::run_sender(send_to, frames, tr, harness::make_policy(name, cfg), opt);
      if (!send_log.empty()) textio::write_file(send_log, stream::format_delay_log(log));
      std::cout << stream::summarize(log).describe() << "\n";
      for (const auto& err : log.errors) std::cerr << err << "\n";
      return log.errors.empty() ? 0 : 2;
    } else if (summ->parsed()) {
      const auto log = stream::parse_delay_log(textio::read_file(sum_log), sum_log);
      std::optional<stream::SessionLog> base;
      if (!sum_base.empty()) base = stream::parse_delay_log(textio::read_file(sum_base), sum_base);
      std::optional<double> ssim;
      if (!sum_decodes.empty()) {
        const auto cfg = sum_args.load();
        ssim = stream::ssim_from_decodes(log, harness::frames_from_config(cfg), sum_decodes);
      }
      const auto rep = stream::summarize(log, base ? &*base : nullptr, ssim);
      std::cout << rep.describe(sum_name) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

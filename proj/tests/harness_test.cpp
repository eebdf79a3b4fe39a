#include "roiadapt/harness.hpp"

#include <gtest/gtest.h>

#include "roiadapt/error.hpp"
#include "roiadapt/svg.hpp"
#include "roiadapt/textio.hpp"

namespace roiadapt::harness {
namespace {

fs::path Scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("roiadapt_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

RunConfig Small() {
  auto cfg = RunConfig::defaults();
  cfg.set("frames.synth.count=6");
  cfg.set("frames.synth.width=96");
  cfg.set("frames.synth.height=64");
  cfg.set("trace.synth.length=60");
  cfg.set("fit.samples=40");
  cfg.set("sac.total_steps=200");
  cfg.set("sac.warmup_steps=100");
  cfg.set("sac.batch=32");
  cfg.set("sac.hidden=[16,16]");
  cfg.set("eval.episodes=2");
  return cfg;
}

TEST(ConfigTest, OverridesAndValidation) {
  auto cfg = RunConfig::defaults();
  cfg.set("sac.total_steps=123");
  cfg.set("env.reward=paper");
  cfg.set("env.threshold=4.5");
  EXPECT_EQ(cfg.at("sac.total_steps").get<int>(), 123);
  EXPECT_EQ(cfg.str("env.reward"), "paper");
  EXPECT_EQ(env_config_from_config(cfg).reward.threshold, 4.5);
  EXPECT_THROW(cfg.set("sac.nope.deeper=1"), DomainError);
  EXPECT_THROW(cfg.set("bogus=1"), DomainError);
  EXPECT_THROW(cfg.set("fit.samples=\"many\""), DomainError);
  EXPECT_THROW(cfg.set("novalue"), DomainError);
  cfg.set("env.reward=rational");
  EXPECT_THROW(cfg.validate(), DomainError);
}

TEST(ConfigTest, MissingPathsFailValidation) {
  auto cfg = RunConfig::defaults();
  cfg.set("trace.path=/nonexistent/trace.csv");
  EXPECT_THROW(cfg.validate(), DomainError);
}

TEST(ConfigTest, FileMergesOntoDefaults) {
  const auto dir = Scratch("config");
  textio::write_file((dir / "c.json").string(), R"({"fit": {"samples": 77}, "env": {"bounds": {"delay": [0.01, 0.5]}}})");
  const auto cfg = RunConfig::from_file((dir / "c.json").string());
  EXPECT_EQ(cfg.at("fit.samples").get<int>(), 77);
  EXPECT_EQ(cfg.at("fit.seed").get<int>(), 3);
  EXPECT_EQ(bounds_from_config(cfg).delay.max, 0.5);
  textio::write_file((dir / "bad.json").string(), R"({"fit": {"sample": 77}})");
  EXPECT_THROW(RunConfig::from_file((dir / "bad.json").string()), DomainError);
}

TEST(ConfigTest, HashIgnoresOutputDirectory) {
  auto a = RunConfig::defaults(), b = RunConfig::defaults();
  b.doc["out_dir"] = "elsewhere";
  EXPECT_EQ(a.hash(), b.hash());
  b.set("sac.seed=9");
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_NE(b.stamp().find("sac:9"), std::string::npos);
}

TEST(ConfigTest, Fnv1aReferenceVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(FitCommandTest, MinimalFitAndReproducibility) {
  auto cfg = Small();
  cfg.set("fit.samples=10");
  const auto dir = Scratch("fit");
  const auto a = cmd_fit(cfg, dir);
  EXPECT_EQ(a.samples.size(), 10u);
  EXPECT_TRUE(fs::exists(a.samples_csv));
  EXPECT_TRUE(fs::exists(a.model_json));
  const auto first = textio::read_file(a.model_json.string());
  const auto b = cmd_fit(cfg, dir);
  EXPECT_EQ(a.model.coeffs, b.model.coeffs);
  EXPECT_EQ(textio::read_file(b.model_json.string()), first);
  EXPECT_NE(first.find(cfg.hash()), std::string::npos);
}

TEST(TrainCommandTest, SmokeRunWritesArtifactsDeterministically) {
  const auto cfg = Small();
  const auto d1 = Scratch("train1"), d2 = Scratch("train2");
  const auto t1 = cmd_train(cfg, d1);
  const auto t2 = cmd_train(cfg, d2);
  for (const auto& p : {t1.checkpoint, t1.curve_csv, t1.curve_svg}) EXPECT_TRUE(fs::exists(p)) << p;
  EXPECT_FALSE(t1.curve.empty());
  for (const char* name : {"curve.csv", "checkpoint.json", "curve.svg", "samples.csv", "model.json"})
    EXPECT_EQ(textio::read_file((d1 / name).string()), textio::read_file((d2 / name).string())) << name;
  EXPECT_NE(textio::read_file(t1.curve_csv.string()).find(cfg.hash()), std::string::npos);
}

TEST(EvalCommandTest, BaselinesAndReport) {
  const auto cfg = Small();
  const auto dir = Scratch("eval");
  const auto e = cmd_eval(cfg, dir, {"low", "high"});
  ASSERT_EQ(e.policies.size(), 2u);
  const auto& low = e.policies[0];
  const auto& high = e.policies[1];
  ASSERT_EQ(low.rows.size(), high.rows.size());
  for (std::size_t i = 0; i < low.rows.size(); ++i) {
    EXPECT_GE(high.rows[i].delay_s, low.rows[i].delay_s);
    EXPECT_EQ(high.rows[i].qf, 100);
    EXPECT_EQ(high.rows[i].ssim, 1.0);
    EXPECT_EQ(low.rows[i].qf, 1);
  }
  EXPECT_EQ(e.summary["bounds"], bounds_json(bounds_from_config(cfg)));
  EXPECT_EQ(e.summary["baselines"], baseline_definitions());
  EXPECT_TRUE(e.summary["deltas"]["low"].contains("delay_reduction_vs_high_pct"));
  for (const char* name : {"eval_low.csv", "eval_high.csv", "normalized_low.csv", "dtq_high.svg",
                           "delay_comparison.svg", "quality_bars.svg", "summary.md"})
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  EXPECT_NE(textio::read_file(e.summary_md.string()).find("full-frame ROI"), std::string::npos);
  EXPECT_THROW(cmd_eval(cfg, dir, {"checkpoint"}), DomainError);
}

TEST(EvalCommandTest, ThreadedAndSequentialAgree) {
  auto cfg = Small();
  const auto d1 = Scratch("eval_t"), d2 = Scratch("eval_s");
  cmd_eval(cfg, d1, {"low", "high"});
  cfg.set("eval.threads=false");
  cmd_eval(cfg, d2, {"low", "high"});
  // the stamp line differs because eval.threads is part of the hash
  const auto a = env::parse_episode_log(textio::read_file((d1 / "eval_high.csv").string()));
  const auto b = env::parse_episode_log(textio::read_file((d2 / "eval_high.csv").string()));
  EXPECT_EQ(env::format_episode_log(a), env::format_episode_log(b));
}

TEST(ReportCommandTest, EmptyCsvIsAnError) {
  const auto dir = Scratch("report_empty");
  textio::write_file((dir / "e.csv").string(), "step,reward\n");
  EXPECT_THROW(cmd_report((dir / "e.csv").string(), "step", {}, "line", (dir / "o.svg").string()), DomainError);
  textio::write_file((dir / "z.csv").string(), "");
  EXPECT_THROW(cmd_report((dir / "z.csv").string(), "", {}, "bar", (dir / "o.svg").string()), DomainError);
}

TEST(ReportCommandTest, RerenderIsIdempotent) {
  const auto dir = Scratch("report");
  textio::write_file((dir / "d.csv").string(), "# note\nstep,a,b\n0,1.5,2\n1,-3,4\n2,7.25,0\n");
  const auto out = (dir / "o.svg").string();
  cmd_report((dir / "d.csv").string(), "step", {"a", "b"}, "line", out);
  const auto first = textio::read_file(out);
  cmd_report((dir / "d.csv").string(), "step", {"a", "b"}, "line", out);
  EXPECT_EQ(textio::read_file(out), first);
  cmd_report((dir / "d.csv").string(), "", {}, "bar", out);
  EXPECT_NE(textio::read_file(out).find("<rect"), std::string::npos);
  EXPECT_THROW(cmd_report((dir / "d.csv").string(), "step", {"c"}, "line", out), DomainError);
}

TEST(SvgTest, AxisRangeCoversData) {
  const std::vector<svg::Series> s = {{"a", {0, 1, 2}, {1.5, -3, 7.25}}, {"b", {0, 1}, {2, 4}}};
  const auto r = svg::y_range(s);
  EXPECT_LE(r.min, -3);
  EXPECT_GE(r.max, 7.25);
  const auto flat = svg::y_range({{"c", {0, 1}, {5, 5}}});
  EXPECT_LT(flat.min, 5);
  EXPECT_GT(flat.max, 5);
  EXPECT_THROW(svg::line_chart("t", "x", "y", {}), DomainError);
  EXPECT_THROW(svg::bar_chart("t", "y", {}), DomainError);
}

}  // namespace
}  // namespace roiadapt::harness

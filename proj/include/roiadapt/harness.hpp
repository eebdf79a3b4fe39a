#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roiadapt/dataset.hpp"
#include "roiadapt/env.hpp"
#include "roiadapt/sac.hpp"
#include "roiadapt/sizemodel.hpp"
#include "roiadapt/stream.hpp"
#include "roiadapt/traces.hpp"

namespace roiadapt::harness {

namespace fs = std::filesystem;

// Every knob of a run. Built from defaults, an optional JSON file, and
// `key.path=value` overrides, in that order.
struct RunConfig {
  nlohmann::json doc;

  static RunConfig defaults();
  static RunConfig from_file(const std::string& path);

  // `dotted.key=value`; the value is parsed as JSON when possible, otherwise
  // taken as a string. Unknown keys are rejected.
  void set(const std::string& assignment);
  // Referenced paths exist, enumerations parse, hyperparameters are sane.
  void validate() const;

  std::string hash() const;  // FNV-1a 64 over the canonical dump, hex
  nlohmann::json seeds() const;
  // One-line provenance stamp written into every artifact.
  std::string stamp() const;

  std::string str(const std::string& dotted) const;
  const nlohmann::json& at(const std::string& dotted) const;
};

std::uint64_t fnv1a64(const std::string& bytes);

// `out_dir` from the config if set, else runs/<UTC timestamp>-<command>.
fs::path make_run_dir(const RunConfig& cfg, const std::string& command);

dataset::FrameSet frames_from_config(const RunConfig& cfg);
traces::ThroughputTrace trace_from_config(const RunConfig& cfg);
env::NormalizationBounds bounds_from_config(const RunConfig& cfg);
env::EnvConfig env_config_from_config(const RunConfig& cfg);
sac::SacHyperParams hyperparams_from_config(const RunConfig& cfg);
nlohmann::json bounds_json(const env::NormalizationBounds& b);

// Random (frame, action) pairs pushed through apply_action and the encoder.
std::vector<sizemodel::SizeSample> collect_size_samples(const dataset::FrameSet& frames, std::size_t n,
                                                        std::uint64_t seed);

struct FitArtifacts {
  sizemodel::PolynomialModel model;
  std::vector<sizemodel::SizeSample> samples;
  fs::path samples_csv;
  fs::path model_json;
};

struct TrainArtifacts {
  sac::TrainedPolicy policy;
  std::vector<sac::CurvePoint> curve;
  std::optional<FitArtifacts> fit;  // when the model had to be fitted first
  fs::path checkpoint;
  fs::path curve_csv;
  fs::path curve_svg;
};

struct PolicyEval {
  std::string name;
  std::vector<env::EpisodeLogRow> rows;
  double mean_delay = 0.0;
  double mean_ssim = 0.0;
  double mean_reward = 0.0;
  double mean_bytes = 0.0;
};

struct EvalArtifacts {
  std::vector<PolicyEval> policies;
  nlohmann::json summary;
  fs::path summary_json;
  fs::path summary_md;
};

// Policy as a state -> action map; `checkpoint` loads from the config path.
stream::PolicyFn make_policy(const std::string& name, const RunConfig& cfg,
                             const std::shared_ptr<const sac::TrainedPolicy>& trained = nullptr);
stream::PolicyFn policy_fn(const sac::TrainedPolicy& p);

// Baseline semantics printed in reports.
std::string baseline_definitions();

FitArtifacts cmd_fit(const RunConfig& cfg, const fs::path& out_dir);
TrainArtifacts cmd_train(const RunConfig& cfg, const fs::path& out_dir);
// Replays the same frames and trace windows under each named policy in
// measured mode. Policies run on separate threads when eval.threads is set.
EvalArtifacts cmd_eval(const RunConfig& cfg, const fs::path& out_dir, const std::vector<std::string>& policies,
                       const std::shared_ptr<const sac::TrainedPolicy>& trained = nullptr);
PolicyEval replay_policy(const std::string& name, const stream::PolicyFn& policy, const dataset::FrameSet& frames,
                         const traces::ThroughputTrace& trace, const env::EnvConfig& env_cfg, std::size_t episodes);

// Generic numeric CSV: header line then rows; `#` comments skipped.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<double> column(const std::string& name) const;
};
Table read_table(const std::string& path);

// Renders `y_columns` of `csv` against `x_column` (line) or the column means
// (bar) to `out`. Throws DomainError for a CSV without data rows.
void cmd_report(const std::string& csv, const std::string& x_column, const std::vector<std::string>& y_columns,
                const std::string& kind, const std::string& out, const std::string& title = {});

void write_manifest(const fs::path& out_dir, const std::string& command, const RunConfig& cfg,
                    const std::vector<fs::path>& artifacts);

}  // namespace roiadapt::harness

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dtsync/baselines.hpp"
#include "dtsync/config.hpp"
#include "dtsync/sac.hpp"

// Configuration loading, run orchestration and CSV persistence.

namespace dtsync::exp {

struct ExperimentConfig {
  SystemConfig system;
  sac::SacHyper hyper;
  std::uint64_t seed = 1;
  std::string policy = "sac";  // sac | random | nosc | greedy
  int eval_episodes = 50;
  std::uint64_t eval_seed_base = 1000;
  std::string out_dir = "runs";
  std::string sweep_axis;  // K | D_range | phi_min | f_u_max
  std::vector<double> sweep_values;
};

struct ConfigError : std::runtime_error {
  ConfigError(const std::string& file, int line, const std::string& what);
  int line;
};

/// Sectioned key=value text; unknown keys, bad values and violated
/// invariants are rejected with line-precise messages. An empty file
/// yields the full defaults.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& name = "<string>");

/// Training CSV schema, one row per completed episode.
extern const char* kTrainCsvHeader;

/// Trains per the config, streaming metrics to <out>/metrics.csv (flushed
/// per row) and checkpointing to <out>/checkpoint each epoch. Returns 0 on
/// success; on a non-finite loss the last epoch checkpoint is retained and
/// a nonzero code returned.
int run_training(const ExperimentConfig& cfg, const std::string& out_dir);

struct EvalSummary {
  double mean_latency = 0.0;  // per-slot latency total, averaged
  double std_latency = 0.0;   // sample std over episodes
  double mean_return = 0.0;
  double deadline_violation_rate = 0.0;  // fraction of (UD, slot) pairs
  double energy_violation_rate = 0.0;
  double edge_violation_rate = 0.0;  // fraction of slots, pre-projection
  int episodes = 0;
};

/// Deterministic-policy evaluation over eval_episodes seeded episodes.
EvalSummary evaluate_policy(const SystemConfig& system, base::Policy& policy,
                            int episodes, std::uint64_t seed_base);

/// Policy factory for the analytic baselines ("random", "greedy", "nosc")
/// or a trained agent loaded from checkpoint_dir when policy is "sac"
/// (or "nosc" with a checkpoint: pinned agent).
std::unique_ptr<base::Policy> make_policy(const ExperimentConfig& cfg,
                                          const std::string& checkpoint_dir);

/// Eval entry point; empty checkpoint_dir selects the analytic policy
/// named in the config.
EvalSummary run_eval(const ExperimentConfig& cfg,
                     const std::string& checkpoint_dir);

/// One run per axis value (training for sac, direct evaluation for the
/// analytic policies); appends rows "axis,value,policy,mean_latency,
/// std_latency" to <out>/sweep.csv. Per-value failures are flagged and the
/// sweep continues. Returns the number of failed points.
int run_sweep(const ExperimentConfig& cfg, const std::string& out_dir);

/// Applies one sweep-axis value to a config.
ExperimentConfig apply_sweep_value(const ExperimentConfig& cfg,
                                   const std::string& axis, double value);

}  // namespace dtsync::exp

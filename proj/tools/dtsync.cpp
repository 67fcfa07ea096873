#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "dtsync/experiment.hpp"

namespace {

dtsync::exp::ExperimentConfig load_or_default(const std::string& path) {
  if (path.empty()) return dtsync::exp::ExperimentConfig{};
  return dtsync::exp::load_config(path);
}

// Relative output directories live under DTSYNC_OUT_ROOT when it is set.
std::string resolve_out(const std::string& dir) {
  const char* root = std::getenv("DTSYNC_OUT_ROOT");
  if (root == nullptr || dir.empty() || dir.front() == '/') return dir;
  return std::string(root) + "/" + dir;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Digital-twin synchronization simulator and trainer"};
  app.require_subcommand(1);

  std::string config_path, out_dir, checkpoint, policy, axis, values_csv;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int episodes = 0;

  auto* train = app.add_subcommand("train", "train the agent per the config");
  train->add_option("--config", config_path, "config file (defaults apply)");
  train->add_option("--seed", seed, "override the run seed")
      ->each([&](const std::string&) { seed_set = true; });
  train->add_option("--out", out_dir, "output directory");

  auto* eval = app.add_subcommand("eval", "evaluate a policy");
  eval->add_option("--config", config_path, "config file (defaults apply)");
  eval->add_option("--checkpoint", checkpoint, "trained agent directory");
  eval->add_option("--policy", policy, "sac|random|greedy|nosc");
  eval->add_option("--episodes", episodes, "evaluation episodes");

  auto* sweep = app.add_subcommand("sweep", "run one point per axis value");
  sweep->add_option("--config", config_path, "config file (defaults apply)");
  sweep->add_option("--axis", axis, "K|D_range|phi_min|f_u_max");
  sweep->add_option("--values", values_csv, "comma-separated axis values");
  sweep->add_option("--policy", policy, "sac|random|greedy|nosc");
  sweep->add_option("--out", out_dir, "output directory");
  sweep->add_option("--seed", seed, "override the run seed")
      ->each([&](const std::string&) { seed_set = true; });

  CLI11_PARSE(app, argc, argv);

  try {
    dtsync::exp::ExperimentConfig cfg = load_or_default(config_path);
    if (seed_set) cfg.seed = seed;
    if (!policy.empty()) cfg.policy = policy;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    const std::string out = resolve_out(cfg.out_dir);

    if (train->parsed()) {
      const int rc = dtsync::exp::run_training(cfg, out);
      if (rc == 0)
        std::printf("training complete; metrics and checkpoint in %s\n",
                    out.c_str());
      return rc;
    }

    if (eval->parsed()) {
      if (episodes > 0) cfg.eval_episodes = episodes;
      if (checkpoint.empty() && cfg.policy == "sac") {
        std::fprintf(stderr, "eval: pass --checkpoint or an analytic --policy\n");
        return 2;
      }
      const auto s = dtsync::exp::run_eval(cfg, checkpoint);
      std::printf(
          "policy=%s episodes=%d\n"
          "mean_latency_s %.6g\nstd_latency_s %.6g\nmean_return %.6g\n"
          "deadline_violation_rate %.4g\nenergy_violation_rate %.4g\n"
          "edge_violation_rate %.4g\n",
          checkpoint.empty() ? cfg.policy.c_str() : "checkpoint",
          s.episodes, s.mean_latency, s.std_latency, s.mean_return,
          s.deadline_violation_rate, s.energy_violation_rate,
          s.edge_violation_rate);
      return 0;
    }

    if (sweep->parsed()) {
      if (!axis.empty()) cfg.sweep_axis = axis;
      if (!values_csv.empty()) {
        cfg.sweep_values.clear();
        std::string item;
        std::istringstream in(values_csv);
        while (std::getline(in, item, ','))
          if (!item.empty()) cfg.sweep_values.push_back(std::stod(item));
      }
      const int failed = dtsync::exp::run_sweep(cfg, out);
      std::printf("sweep finished, %d failed point(s); results in %s/sweep.csv\n",
                  failed, out.c_str());
      return failed == 0 ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

#include "dtsync/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dtsync/env.hpp"

namespace dtsync::exp {

namespace fs = std::filesystem;

ConfigError::ConfigError(const std::string& file, int line_no,
                         const std::string& what)
    : std::runtime_error(file + ":" + std::to_string(line_no) + ": " + what),
      line(line_no) {}

namespace {

constexpr std::uint64_t kPolicyStreamSalt = 0x9011C7ULL;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& file, int line, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0' || !std::isfinite(x))
    throw ConfigError(file, line, "cannot parse '" + v + "' as a number");
  return x;
}

long parse_long(const std::string& file, int line, const std::string& v) {
  const double x = parse_double(file, line, v);
  if (x != std::floor(x) || std::fabs(x) > 9e15)
    throw ConfigError(file, line, "expected an integer, got '" + v + "'");
  return static_cast<long>(x);
}

struct Kv {
  std::string section, key, value;
  int line;
};

std::vector<Kv> tokenize(const std::string& text, const std::string& name) {
  std::vector<Kv> out;
  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw ConfigError(name, line, "malformed section header");
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError(name, line, "expected key = value");
    Kv kv{section, trim(s.substr(0, eq)), trim(s.substr(eq + 1)), line};
    if (kv.key.empty()) throw ConfigError(name, line, "empty key");
    out.push_back(std::move(kv));
  }
  return out;
}

std::vector<double> parse_value_list(const std::string& file, int line,
                                     const std::string& v) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(file, line, item));
  }
  if (out.empty()) throw ConfigError(file, line, "empty value list");
  return out;
}

void apply_kv(ExperimentConfig& cfg, const Kv& kv, const std::string& name) {
  SystemConfig& sys = cfg.system;
  MobilityParams& mob = cfg.system.mobility;
  sac::SacHyper& hy = cfg.hyper;
  auto num = [&] { return parse_double(name, kv.line, kv.value); };
  auto integer = [&] { return parse_long(name, kv.line, kv.value); };

  const std::string id = kv.section + "." + kv.key;
  if (id == "system.num_uds") sys.num_uds = int(integer());
  else if (id == "system.num_slots") sys.num_slots = int(integer());
  else if (id == "system.cycle_s") sys.cycle_s = num();
  else if (id == "system.eta") sys.eta = num();
  else if (id == "system.bandwidth_hz") sys.bandwidth_hz = num();
  else if (id == "system.noise_w") sys.noise_w = num();
  else if (id == "system.noise_dbm") sys.noise_w = dbm_to_watts(num());
  else if (id == "system.beta0") sys.beta0 = num();
  else if (id == "system.beta0_db") sys.beta0 = db_to_linear(num());
  else if (id == "system.pathloss_exp") sys.pathloss_exp = num();
  else if (id == "system.cycles_per_bit") sys.cycles_per_bit = num();
  else if (id == "system.k_loc") sys.k_loc = num();
  else if (id == "system.x_exp") sys.x_exp = num();
  else if (id == "system.y_exp") sys.y_exp = num();
  else if (id == "system.d_min_bits") sys.d_min_bits = num();
  else if (id == "system.d_max_bits") sys.d_max_bits = num();
  else if (id == "system.phi_min") sys.phi_min = num();
  else if (id == "system.f_u_max_hz") sys.f_u_max_hz = num();
  else if (id == "system.f_e_max_hz") sys.f_e_max_hz = num();
  else if (id == "system.p_min_w") sys.p_min_w = num();
  else if (id == "system.p_max_w") sys.p_max_w = num();
  else if (id == "system.e_u_max_j") sys.e_u_max_j = num();
  else if (id == "system.sense_rate_bps") sys.sense_rate_bps = num();
  else if (id == "system.sense_energy_j_per_bit") sys.sense_energy_j_per_bit = num();
  else if (id == "system.penalty_weight") sys.penalty_weight = num();
  else if (id == "system.bs_x") sys.bs_pos[0] = num();
  else if (id == "system.bs_y") sys.bs_pos[1] = num();
  else if (id == "system.bs_z") sys.bs_pos[2] = num();
  else if (id == "system.d_ref_m") sys.d_ref_m = num();
  else if (id == "system.f_loc_min_frac") sys.f_loc_min_frac = num();
  else if (id == "system.f_edge_min_frac") sys.f_edge_min_frac = num();
  else if (id == "system.f_edge_kappa") sys.f_edge_kappa = num();
  else if (id == "mobility.rho") mob.rho = num();
  else if (id == "mobility.v_mean") mob.v_mean = num();
  else if (id == "mobility.v_max") mob.v_max = num();
  else if (id == "mobility.sigma_v") mob.sigma_v = num();
  else if (id == "mobility.sigma_theta") mob.sigma_theta = num();
  else if (id == "mobility.spawn_x") mob.spawn_center[0] = num();
  else if (id == "mobility.spawn_y") mob.spawn_center[1] = num();
  else if (id == "mobility.spawn_radius") mob.spawn_radius = num();
  else if (id == "sac.lr") hy.lr = num();
  else if (id == "sac.batch_size") hy.batch_size = int(integer());
  else if (id == "sac.buffer_capacity") hy.buffer_capacity = std::size_t(integer());
  else if (id == "sac.gamma") hy.gamma = num();
  else if (id == "sac.epochs") hy.epochs = int(integer());
  else if (id == "sac.steps_per_epoch") hy.steps_per_epoch = int(integer());
  else if (id == "sac.target_sync_every") hy.target_sync_every = int(integer());
  else if (id == "sac.hidden_width") hy.hidden_width = int(integer());
  else if (id == "sac.target_entropy") hy.target_entropy = num();
  else if (id == "sac.reward_scale") hy.reward_scale = num();
  else if (id == "run.seed") cfg.seed = std::uint64_t(integer());
  else if (id == "run.policy") {
    if (kv.value != "sac" && kv.value != "random" && kv.value != "greedy" &&
        kv.value != "nosc")
      throw ConfigError(name, kv.line, "unknown policy '" + kv.value + "'");
    cfg.policy = kv.value;
  } else if (id == "run.eval_episodes") cfg.eval_episodes = int(integer());
  else if (id == "run.eval_seed_base") cfg.eval_seed_base = std::uint64_t(integer());
  else if (id == "run.out_dir") cfg.out_dir = kv.value;
  else if (id == "sweep.axis") {
    if (kv.value != "K" && kv.value != "D_range" && kv.value != "phi_min" &&
        kv.value != "f_u_max")
      throw ConfigError(name, kv.line, "unknown sweep axis '" + kv.value + "'");
    cfg.sweep_axis = kv.value;
  } else if (id == "sweep.values") cfg.sweep_values = parse_value_list(name, kv.line, kv.value);
  else throw ConfigError(name, kv.line, "unknown key '" + id + "'");
}

void validate_experiment(const ExperimentConfig& cfg, const std::string& name) {
  try {
    cfg.system.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(name, 0, e.what());
  }
  auto fail = [&](const char* msg) { throw ConfigError(name, 0, msg); };
  if (cfg.hyper.lr <= 0) fail("sac.lr must be positive");
  if (cfg.hyper.batch_size < 1) fail("sac.batch_size must be >= 1");
  if (cfg.hyper.buffer_capacity < std::size_t(cfg.hyper.batch_size))
    fail("sac.buffer_capacity must hold at least one batch");
  if (cfg.hyper.gamma < 0 || cfg.hyper.gamma > 1) fail("sac.gamma in [0,1]");
  if (cfg.hyper.epochs < 1 || cfg.hyper.steps_per_epoch < 1)
    fail("sac.epochs and sac.steps_per_epoch must be >= 1");
  if (cfg.hyper.target_sync_every < 1) fail("sac.target_sync_every must be >= 1");
  if (cfg.hyper.hidden_width < 1) fail("sac.hidden_width must be >= 1");
  if (cfg.eval_episodes < 1) fail("run.eval_episodes must be >= 1");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& name) {
  ExperimentConfig cfg;
  for (const Kv& kv : tokenize(text, name)) apply_kv(cfg, kv, name);
  validate_experiment(cfg, name);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

const char* kTrainCsvHeader =
    "epoch,step,episode,ep_return,mean_latency,mean_t_sync,pt,pe,pf,alpha,"
    "q1_loss,q2_loss\n";

namespace {

// Rows are assembled fully, then written and flushed in one call, so an
// interrupted run leaves no partial row behind.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const char* header) {
    f_ = std::fopen(path.c_str(), "wb");
    if (!f_) throw std::runtime_error("cannot open " + path + " for writing");
    std::fwrite(header, 1, std::strlen(header), f_);
    std::fflush(f_);
  }
  ~CsvWriter() {
    if (f_) std::fclose(f_);
  }
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::string& line) {
    std::fwrite(line.data(), 1, line.size(), f_);
    std::fflush(f_);
  }

 private:
  std::FILE* f_ = nullptr;
};

std::string format_train_row(const sac::EpisodeLog& log) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%d,%ld,%d,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,"
                "%.12g\n",
                log.epoch, log.global_step, log.episode, log.ep_return,
                log.mean_latency, log.mean_t_sync, log.pt_sum, log.pe_sum,
                log.pf_sum, log.alpha, log.q1_loss, log.q2_loss);
  return buf;
}

}  // namespace

int run_training(const ExperimentConfig& cfg, const std::string& out_dir) {
  if (cfg.policy != "sac" && cfg.policy != "nosc") {
    std::fprintf(stderr, "policy '%s' is analytic; nothing to train\n",
                 cfg.policy.c_str());
    return 2;
  }
  fs::create_directories(out_dir);
  env::Environment environment(cfg.system);
  CsvWriter csv(out_dir + "/metrics.csv", kTrainCsvHeader);

  sac::TrainOptions opt;
  opt.seed = cfg.seed;
  opt.pin_phi = (cfg.policy == "nosc");
  opt.checkpoint_dir = out_dir + "/checkpoint";
  opt.on_episode = [&](const sac::EpisodeLog& log) {
    csv.row(format_train_row(log));
  };
  try {
    sac::train(environment, cfg.hyper, opt);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "training failed: %s (last epoch checkpoint kept)\n",
                 e.what());
    return 1;
  }
  return 0;
}

EvalSummary evaluate_policy(const SystemConfig& system, base::Policy& policy,
                            int episodes, std::uint64_t seed_base) {
  env::Environment environment(system);
  const double deadline = (1.0 - system.eta) * system.tau();

  EvalSummary sum;
  sum.episodes = episodes;
  std::vector<double> per_episode(episodes);
  long ud_slots = 0, deadline_viol = 0, energy_viol = 0;
  long slots = 0, edge_viol = 0;

  for (int e = 0; e < episodes; ++e) {
    const std::uint64_t seed = seed_base + std::uint64_t(e);
    policy.reseed(rng::mix_seed(seed, kPolicyStreamSalt));
    env::StateVec state = environment.reset(seed);
    double latency = 0.0;
    double ep_return = 0.0;
    for (int n = 0; n < system.num_slots; ++n) {
      const env::Transition tr = environment.step(policy.act(state));
      const env::StepInfo& info = environment.last_step();
      latency += info.metrics.t_slot;
      ep_return += tr.reward;
      ++slots;
      if (info.decoded.fe_sum_raw > system.f_e_max_hz) ++edge_viol;
      for (const auto& m : info.metrics.ud) {
        ++ud_slots;
        if (m.t_sync > deadline) ++deadline_viol;
        if (m.e_total > system.e_u_max_j) ++energy_viol;
      }
      state = tr.next_state;
    }
    per_episode[e] = latency / system.num_slots;
    sum.mean_return += ep_return / episodes;
  }

  for (double v : per_episode) sum.mean_latency += v / episodes;
  if (episodes > 1) {
    double ss = 0.0;
    for (double v : per_episode) ss += (v - sum.mean_latency) * (v - sum.mean_latency);
    sum.std_latency = std::sqrt(ss / (episodes - 1));
  }
  sum.deadline_violation_rate = double(deadline_viol) / double(ud_slots);
  sum.energy_violation_rate = double(energy_viol) / double(ud_slots);
  sum.edge_violation_rate = double(edge_viol) / double(slots);
  return sum;
}

std::unique_ptr<base::Policy> make_policy(const ExperimentConfig& cfg,
                                          const std::string& checkpoint_dir) {
  const int k = cfg.system.num_uds;
  if (!checkpoint_dir.empty()) {
    sac::AgentParams agent = sac::load_agent(checkpoint_dir);
    if (agent.state_dim != 2 * k || agent.action_dim != 4 * k)
      throw std::runtime_error(
          "checkpoint dimensions do not match the configured UD count");
    return std::make_unique<base::AgentPolicy>(std::move(agent),
                                               cfg.policy == "nosc", k);
  }
  if (cfg.policy == "random")
    return std::make_unique<base::RandomPolicy>(
        4 * k, rng::mix_seed(cfg.seed, kPolicyStreamSalt));
  if (cfg.policy == "greedy")
    return std::make_unique<base::GreedyPolicy>(cfg.system);
  if (cfg.policy == "nosc")
    return std::make_unique<base::NoScPolicy>(
        std::make_unique<base::GreedyPolicy>(cfg.system), k);
  throw std::runtime_error("policy '" + cfg.policy +
                           "' needs a trained checkpoint");
}

EvalSummary run_eval(const ExperimentConfig& cfg,
                     const std::string& checkpoint_dir) {
  auto policy = make_policy(cfg, checkpoint_dir);
  return evaluate_policy(cfg.system, *policy, cfg.eval_episodes,
                         cfg.eval_seed_base);
}

ExperimentConfig apply_sweep_value(const ExperimentConfig& cfg,
                                   const std::string& axis, double value) {
  ExperimentConfig out = cfg;
  if (axis == "K") {
    out.system.num_uds = int(value);
  } else if (axis == "D_range") {
    // value is the demand midpoint; the window width is preserved
    const double half = 0.5 * (cfg.system.d_max_bits - cfg.system.d_min_bits);
    out.system.d_min_bits = value - half;
    out.system.d_max_bits = value + half;
  } else if (axis == "phi_min") {
    out.system.phi_min = value;
  } else if (axis == "f_u_max") {
    out.system.f_u_max_hz = value;
  } else {
    throw std::invalid_argument("unknown sweep axis '" + axis + "'");
  }
  out.system.validate();
  return out;
}

int run_sweep(const ExperimentConfig& cfg, const std::string& out_dir) {
  if (cfg.sweep_axis.empty() || cfg.sweep_values.empty())
    throw std::invalid_argument("sweep needs an axis and a value list");
  fs::create_directories(out_dir);
  CsvWriter csv(out_dir + "/sweep.csv",
                "axis,value,policy,mean_latency,std_latency\n");

  int failures = 0;
  for (double value : cfg.sweep_values) {
    try {
      ExperimentConfig point = apply_sweep_value(cfg, cfg.sweep_axis, value);
      std::string checkpoint;
      if (point.policy == "sac") {
        char sub[128];
        std::snprintf(sub, sizeof(sub), "%s/%s_%g", out_dir.c_str(),
                      cfg.sweep_axis.c_str(), value);
        if (run_training(point, sub) != 0)
          throw std::runtime_error("training failed at this sweep point");
        checkpoint = std::string(sub) + "/checkpoint";
      }
      const EvalSummary s = run_eval(point, checkpoint);
      char row[256];
      std::snprintf(row, sizeof(row), "%s,%.12g,%s,%.12g,%.12g\n",
                    cfg.sweep_axis.c_str(), value, point.policy.c_str(),
                    s.mean_latency, s.std_latency);
      csv.row(row);
    } catch (const std::exception& e) {
      ++failures;
      std::fprintf(stderr, "sweep point %s=%g failed: %s\n",
                   cfg.sweep_axis.c_str(), value, e.what());
    }
  }
  return failures;
}

}  // namespace dtsync::exp

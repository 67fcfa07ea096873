#pragma once

#include <cstdint>
#include <vector>

#include "dtsync/config.hpp"
#include "dtsync/dynamics.hpp"
#include "dtsync/rng.hpp"
#include "dtsync/simcore.hpp"

// Sequential decision wrapper: state construction, action decoding into
// the feasible set, hinge penalties and the per-slot reward.

namespace dtsync::env {

/// 2K entries: distances d_k/d_ref for k=1..K, then demands D_k/d_max.
using StateVec = std::vector<double>;

/// 4K entries in (-1,1), one block per decision variable:
/// [0,K) extraction factor, [K,2K) local frequency, [2K,3K) transmit
/// power, [3K,4K) edge frequency.
using RawAction = std::vector<double>;

/// Largest representable value strictly below 1; decodes to the exact
/// upper endpoint of each action interval.
inline constexpr double kRawUpper = 0x1.fffffffffffffp-1;

struct DecodedAction {
  std::vector<sim::UdAction> ud;
  double fe_sum_raw = 0.0;  // pre-projection edge-frequency total
  bool projected = false;
};

struct Penalties {
  double deadline = 0.0;  // P_t
  double energy = 0.0;    // P_e
  double edge = 0.0;      // P_f
  double total() const { return deadline + energy + edge; }
};

struct Transition {
  StateVec state;
  RawAction action;
  double reward = 0.0;
  StateVec next_state;
  bool done = false;
};

/// Everything the last step produced, for logging and tests.
struct StepInfo {
  sim::SlotMetrics metrics;
  DecodedAction decoded;
  Penalties penalties;
  double reward = 0.0;
};

/// Affine map of raw in (-1,1) onto each variable's interval, with the
/// edge-frequency block projected onto the shared cap when its raw sum
/// exceeds it. Throws on entries outside (-1,1).
DecodedAction decode_action(const RawAction& raw, const SystemConfig& cfg);

/// Hinge penalties: W*sum_k max(0, t_sync - (1-eta)tau) in seconds,
/// W*sum_k max(0, e_k - E_max) in joules, and the dimensionless edge
/// overshoot W*max(0, (fe_sum_raw - f_e_max)/f_e_max). Normalizing the
/// edge term keeps the three penalties commensurate; a raw-Hz violation
/// would swamp every latency signal by ten orders of magnitude.
Penalties compute_penalties(const sim::SlotMetrics& metrics,
                            double fe_sum_raw, const SystemConfig& cfg);

class Environment {
 public:
  explicit Environment(SystemConfig cfg);

  StateVec reset(std::uint64_t seed);
  Transition step(const RawAction& raw);

  const StepInfo& last_step() const { return last_; }
  const SystemConfig& config() const { return cfg_; }
  const std::vector<dyn::UdState>& ud_states() const { return uds_; }

  int num_uds() const { return cfg_.num_uds; }
  int state_dim() const { return 2 * cfg_.num_uds; }
  int action_dim() const { return 4 * cfg_.num_uds; }
  int slot() const { return slot_; }
  bool done() const { return slot_ >= cfg_.num_slots; }

 private:
  StateVec observe() const;

  SystemConfig cfg_;
  std::vector<dyn::UdState> uds_;
  std::vector<rng::RngStream> ud_rng_;
  int slot_ = 0;
  bool started_ = false;
  StepInfo last_;
};

}  // namespace dtsync::env

#pragma once

#include <cstdint>
#include <memory>

#include "dtsync/config.hpp"
#include "dtsync/env.hpp"
#include "dtsync/rng.hpp"
#include "dtsync/sac.hpp"

// Comparison policies behind one act(state) interface: random, greedy
// resource heuristic, the no-semantic-compression wrapper, and a trained
// agent snapshot.

namespace dtsync::base {

class Policy {
 public:
  virtual ~Policy() = default;
  virtual env::RawAction act(const env::StateVec& state) = 0;
  virtual const char* name() const = 0;
  /// Re-seed stochastic policies; deterministic ones ignore it.
  virtual void reseed(std::uint64_t) {}
};

/// Uniform on (-1,1)^{4K}.
class RandomPolicy : public Policy {
 public:
  RandomPolicy(int action_dim, std::uint64_t seed);
  env::RawAction act(const env::StateVec& state) override;
  const char* name() const override { return "random"; }
  void reseed(std::uint64_t seed) override;

 private:
  int action_dim_;
  rng::RngStream rng_;
};

/// Wraps any policy and pins every extraction factor to exactly 1, so the
/// raw sensed data is transmitted without compression.
class NoScPolicy : public Policy {
 public:
  NoScPolicy(std::unique_ptr<Policy> inner, int num_uds);
  env::RawAction act(const env::StateVec& state) override;
  const char* name() const override { return "nosc"; }
  void reseed(std::uint64_t seed) override;

 private:
  std::unique_ptr<Policy> inner_;
  int num_uds_;
};

/// Deterministic reference: full local frequency and transmit power, the
/// even edge split, and the extraction factor grid-searched per UD against
/// the expected channel (unit fading).
class GreedyPolicy : public Policy {
 public:
  explicit GreedyPolicy(SystemConfig cfg, int grid_points = 61);
  env::RawAction act(const env::StateVec& state) override;
  const char* name() const override { return "greedy"; }

  /// Per-UD sync latency at phi with greedy resources, used by the grid.
  double sync_latency(double phi, double demand_bits, double distance_m) const;
  double best_phi(double demand_bits, double distance_m) const;

 private:
  SystemConfig cfg_;
  int grid_points_;
};

/// Deterministic evaluation-mode snapshot of a trained agent.
class AgentPolicy : public Policy {
 public:
  AgentPolicy(sac::AgentParams agent, bool pin_phi, int num_uds);
  env::RawAction act(const env::StateVec& state) override;
  const char* name() const override { return pin_phi_ ? "sac-nosc" : "sac"; }

 private:
  sac::AgentParams agent_;
  bool pin_phi_;
  std::vector<std::uint8_t> pinned_;
};

}  // namespace dtsync::base

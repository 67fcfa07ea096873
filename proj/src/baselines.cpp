#include "dtsync/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dtsync/simcore.hpp"

namespace dtsync::base {

namespace {

// inverse of the decode-side affine map, kept strictly inside (-1,1)
double raw_from_unit(double t) {
  return std::clamp(2.0 * t - 1.0, -env::kRawUpper, env::kRawUpper);
}

}  // namespace

RandomPolicy::RandomPolicy(int action_dim, std::uint64_t seed)
    : action_dim_(action_dim), rng_(seed) {}

env::RawAction RandomPolicy::act(const env::StateVec&) {
  env::RawAction raw(action_dim_);
  for (auto& v : raw) {
    do {
      v = rng_.uniform(-1.0, 1.0);
    } while (v <= -1.0);  // uniform01 can return exactly 0
  }
  return raw;
}

void RandomPolicy::reseed(std::uint64_t seed) { rng_ = rng::RngStream(seed); }

NoScPolicy::NoScPolicy(std::unique_ptr<Policy> inner, int num_uds)
    : inner_(std::move(inner)), num_uds_(num_uds) {
  if (!inner_) throw std::invalid_argument("NoScPolicy: null inner policy");
}

env::RawAction NoScPolicy::act(const env::StateVec& state) {
  env::RawAction raw = inner_->act(state);
  std::fill(raw.begin(), raw.begin() + num_uds_, env::kRawUpper);
  return raw;
}

void NoScPolicy::reseed(std::uint64_t seed) { inner_->reseed(seed); }

GreedyPolicy::GreedyPolicy(SystemConfig cfg, int grid_points)
    : cfg_(std::move(cfg)), grid_points_(grid_points) {
  if (grid_points_ < 2)
    throw std::invalid_argument("GreedyPolicy: need at least 2 grid points");
}

double GreedyPolicy::sync_latency(double phi, double demand_bits,
                                  double distance_m) const {
  sim::UdSlotInput in{demand_bits, distance_m, 1.0};
  sim::UdAction act;
  act.phi = phi;
  act.f_loc_hz = cfg_.f_u_max_hz;
  act.p_tx_w = cfg_.p_max_w;
  act.f_edge_hz = cfg_.f_e_max_hz / cfg_.num_uds;
  return sim::evaluate_ud(cfg_, in, act).t_sync;
}

double GreedyPolicy::best_phi(double demand_bits, double distance_m) const {
  double best = cfg_.phi_min;
  double best_t = sync_latency(cfg_.phi_min, demand_bits, distance_m);
  for (int i = 1; i < grid_points_; ++i) {
    const double t = double(i) / (grid_points_ - 1);
    const double phi = cfg_.phi_min + t * (1.0 - cfg_.phi_min);
    const double lat = sync_latency(phi, demand_bits, distance_m);
    if (lat < best_t) {
      best_t = lat;
      best = phi;
    }
  }
  return best;
}

env::RawAction GreedyPolicy::act(const env::StateVec& state) {
  const int k = cfg_.num_uds;
  if (state.size() != static_cast<std::size_t>(2 * k))
    throw std::invalid_argument("GreedyPolicy: state size mismatch");

  const double fe_share = cfg_.f_e_max_hz / k;
  const double fe_lo = cfg_.f_edge_min_frac * fe_share;
  const double fe_hi = cfg_.f_edge_kappa * fe_share;
  // tiny slack keeps the decoded per-UD shares summing strictly under the cap
  const double fe_target = fe_share * (1.0 - 0x1.0p-40);
  const double fe_t = (fe_target - fe_lo) / (fe_hi - fe_lo);

  env::RawAction raw(4 * k);
  const double phi_span = 1.0 - cfg_.phi_min;
  for (int i = 0; i < k; ++i) {
    const double d = state[i] * cfg_.d_ref_m;
    const double demand = state[k + i] * cfg_.d_max_bits;
    const double phi = best_phi(demand, d);
    raw[i] = raw_from_unit(phi_span > 0.0 ? (phi - cfg_.phi_min) / phi_span : 1.0);
    raw[k + i] = env::kRawUpper;      // f_loc = f_u_max
    raw[2 * k + i] = env::kRawUpper;  // p = p_max
    raw[3 * k + i] = raw_from_unit(fe_t);
  }
  return raw;
}

AgentPolicy::AgentPolicy(sac::AgentParams agent, bool pin_phi, int num_uds)
    : agent_(std::move(agent)), pin_phi_(pin_phi) {
  if (pin_phi_) {
    pinned_.assign(agent_.action_dim, 0);
    std::fill(pinned_.begin(), pinned_.begin() + num_uds, 1);
  }
}

env::RawAction AgentPolicy::act(const env::StateVec& state) {
  return sac::mean_action(agent_, state, pin_phi_ ? &pinned_ : nullptr);
}

}  // namespace dtsync::base

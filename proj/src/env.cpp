#include "dtsync/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dtsync::env {

namespace {

// Endpoint-exact interpolation: t=0 gives lo, t=1 gives hi, and the
// result is clamped back into [lo, hi] to absorb rounding.
double lerp_interval(double lo, double hi, double t) {
  return std::clamp(lo * (1.0 - t) + hi * t, lo, hi);
}

double unit_from_raw(double v) { return 0.5 * (v + 1.0); }

}  // namespace

DecodedAction decode_action(const RawAction& raw, const SystemConfig& cfg) {
  const int k = cfg.num_uds;
  if (raw.size() != static_cast<std::size_t>(4 * k))
    throw std::invalid_argument("decode_action: raw action must have 4K entries");
  for (double v : raw) {
    if (!(v > -1.0 && v < 1.0))
      throw std::invalid_argument(
          "decode_action: raw entries must lie strictly inside (-1,1)");
  }

  const double f_loc_lo = cfg.f_loc_min_frac * cfg.f_u_max_hz;
  const double fe_share = cfg.f_e_max_hz / k;
  const double fe_lo = cfg.f_edge_min_frac * fe_share;
  const double fe_hi = cfg.f_edge_kappa * fe_share;

  DecodedAction out;
  out.ud.resize(k);
  for (int i = 0; i < k; ++i) {
    sim::UdAction& a = out.ud[i];
    a.phi = lerp_interval(cfg.phi_min, 1.0, unit_from_raw(raw[i]));
    a.f_loc_hz =
        lerp_interval(f_loc_lo, cfg.f_u_max_hz, unit_from_raw(raw[k + i]));
    a.p_tx_w =
        lerp_interval(cfg.p_min_w, cfg.p_max_w, unit_from_raw(raw[2 * k + i]));
    a.f_edge_hz = lerp_interval(fe_lo, fe_hi, unit_from_raw(raw[3 * k + i]));
    out.fe_sum_raw += a.f_edge_hz;
  }

  if (out.fe_sum_raw > cfg.f_e_max_hz) {
    out.projected = true;
    const double scale = cfg.f_e_max_hz / out.fe_sum_raw;
    double sum = 0.0;
    for (auto& a : out.ud) {
      a.f_edge_hz *= scale;
      sum += a.f_edge_hz;
    }
    // rounding can leave the executed total an ulp above the cap
    while (sum > cfg.f_e_max_hz) {
      sum = 0.0;
      for (auto& a : out.ud) {
        a.f_edge_hz *= 1.0 - 4.0 * 2.220446049250313e-16;
        sum += a.f_edge_hz;
      }
    }
  }
  return out;
}

Penalties compute_penalties(const sim::SlotMetrics& metrics, double fe_sum_raw,
                            const SystemConfig& cfg) {
  Penalties p;
  const double deadline = (1.0 - cfg.eta) * cfg.tau();
  for (const auto& m : metrics.ud) {
    p.deadline += std::max(0.0, m.t_sync - deadline);
    p.energy += std::max(0.0, m.e_total - cfg.e_u_max_j);
  }
  p.deadline *= cfg.penalty_weight;
  p.energy *= cfg.penalty_weight;
  p.edge = cfg.penalty_weight *
           std::max(0.0, (fe_sum_raw - cfg.f_e_max_hz) / cfg.f_e_max_hz);
  return p;
}

Environment::Environment(SystemConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
}

StateVec Environment::reset(std::uint64_t seed) {
  rng::RngStream root(seed);
  uds_.clear();
  ud_rng_.clear();
  uds_.reserve(cfg_.num_uds);
  ud_rng_.reserve(cfg_.num_uds);
  for (int k = 0; k < cfg_.num_uds; ++k) {
    ud_rng_.push_back(root.substream(static_cast<std::uint64_t>(k)));
    uds_.push_back(dyn::init_ud_state(cfg_, ud_rng_.back()));
  }
  slot_ = 0;
  started_ = true;
  last_ = StepInfo{};
  return observe();
}

StateVec Environment::observe() const {
  StateVec s(2 * cfg_.num_uds);
  for (int k = 0; k < cfg_.num_uds; ++k) {
    s[k] = dyn::distance(uds_[k].pos, {cfg_.bs_pos[0], cfg_.bs_pos[1],
                                       cfg_.bs_pos[2]}) /
           cfg_.d_ref_m;
    s[cfg_.num_uds + k] = uds_[k].demand_bits / cfg_.d_max_bits;
  }
  return s;
}

Transition Environment::step(const RawAction& raw) {
  if (!started_) throw std::logic_error("step: call reset first");
  if (done()) throw std::logic_error("step: episode is done");

  Transition tr;
  tr.state = observe();
  tr.action = raw;

  const DecodedAction decoded = decode_action(raw, cfg_);

  std::vector<sim::UdSlotInput> inputs(cfg_.num_uds);
  for (int k = 0; k < cfg_.num_uds; ++k) {
    inputs[k].demand_bits = uds_[k].demand_bits;
    inputs[k].distance_m = tr.state[k] * cfg_.d_ref_m;
    inputs[k].fading_power = uds_[k].fading_power;
  }

  sim::SlotMetrics metrics = sim::evaluate_slot(cfg_, inputs, decoded.ud);
  const Penalties pen = compute_penalties(metrics, decoded.fe_sum_raw, cfg_);
  // reward decomposes exactly: r + T + P_t + P_e + P_f == 0
  const double cost =
      ((metrics.t_slot + pen.deadline) + pen.energy) + pen.edge;
  tr.reward = -cost;

  last_.metrics = std::move(metrics);
  last_.decoded = decoded;
  last_.penalties = pen;
  last_.reward = tr.reward;

  for (int k = 0; k < cfg_.num_uds; ++k) {
    dyn::step_mobility(uds_[k], cfg_.tau(), cfg_.mobility, ud_rng_[k]);
    uds_[k].fading_power = dyn::sample_fading(ud_rng_[k]);
    uds_[k].demand_bits =
        dyn::sample_demand(ud_rng_[k], cfg_.d_min_bits, cfg_.d_max_bits);
  }
  ++slot_;
  tr.next_state = observe();
  tr.done = done();
  return tr;
}

}  // namespace dtsync::env

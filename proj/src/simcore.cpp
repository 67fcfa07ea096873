#include "dtsync/simcore.hpp"

#include <cmath>
#include <stdexcept>

namespace dtsync::sim {

namespace {
void require(bool ok, const char* msg) {
  if (!ok) throw std::domain_error(msg);
}
}  // namespace

double sense_latency(double demand_bits, double sense_rate_bps) {
  require(demand_bits > 0.0, "sense_latency: demand must be positive");
  require(sense_rate_bps > 0.0, "sense_latency: sense rate must be positive");
  return demand_bits / sense_rate_bps;
}

double sense_energy(double demand_bits, double energy_per_bit) {
  require(demand_bits >= 0.0, "sense_energy: demand must be >= 0");
  return energy_per_bit * demand_bits;
}

double extraction_demand(double demand_bits, double phi, double x_exp) {
  require(phi > 0.0, "extraction_demand: phi must be positive");
  return demand_bits / std::pow(phi, x_exp);
}

double extraction_latency(double lambda_bits, double cycles_per_bit,
                          double f_loc_hz) {
  require(f_loc_hz > 0.0, "extraction_latency: frequency must be positive");
  return cycles_per_bit * lambda_bits / f_loc_hz;
}

double extraction_energy(double lambda_bits, double cycles_per_bit,
                         double k_loc, double f_loc_hz) {
  require(f_loc_hz >= 0.0, "extraction_energy: frequency must be >= 0");
  return cycles_per_bit * k_loc * lambda_bits * f_loc_hz * f_loc_hz;
}

double channel_power_gain(double distance_m, double beta0, double pathloss_exp,
                          double fading_power) {
  require(distance_m > 0.0, "channel_power_gain: distance must be positive");
  return beta0 * std::pow(distance_m, pathloss_exp) * fading_power;
}

double uplink_rate(double bandwidth_hz, double p_tx_w, double power_gain,
                   double noise_w) {
  require(bandwidth_hz > 0.0, "uplink_rate: bandwidth must be positive");
  require(noise_w > 0.0, "uplink_rate: noise power must be positive");
  return bandwidth_hz * std::log2(1.0 + p_tx_w * power_gain / noise_w);
}

double uplink_latency(double demand_bits, double phi, double rate_bps) {
  require(rate_bps > 0.0, "uplink_latency: rate must be positive");
  return demand_bits * phi / rate_bps;
}

double uplink_energy(double t_uplink, double p_tx_w) {
  return t_uplink * p_tx_w;
}

double recovery_latency(double demand_bits, double phi, double y_exp,
                        double cycles_per_bit, double f_edge_hz) {
  require(phi > 0.0, "recovery_latency: phi must be positive");
  require(f_edge_hz > 0.0, "recovery_latency: edge frequency must be positive");
  return cycles_per_bit * demand_bits * phi / (std::pow(phi, y_exp) * f_edge_hz);
}

UdMetrics evaluate_ud(const SystemConfig& cfg, const UdSlotInput& in,
                      const UdAction& act) {
  UdMetrics m;
  m.t_sense = sense_latency(in.demand_bits, cfg.sense_rate_bps);
  m.e_sense = sense_energy(in.demand_bits, cfg.sense_energy_j_per_bit);

  const double lambda = extraction_demand(in.demand_bits, act.phi, cfg.x_exp);
  m.t_extract = extraction_latency(lambda, cfg.cycles_per_bit, act.f_loc_hz);
  m.e_extract =
      extraction_energy(lambda, cfg.cycles_per_bit, cfg.k_loc, act.f_loc_hz);

  const double gain = channel_power_gain(in.distance_m, cfg.beta0,
                                         cfg.pathloss_exp, in.fading_power);
  m.rate_bps = uplink_rate(cfg.bandwidth_per_ud(), act.p_tx_w, gain, cfg.noise_w);
  m.t_uplink = uplink_latency(in.demand_bits, act.phi, m.rate_bps);
  m.e_uplink = uplink_energy(m.t_uplink, act.p_tx_w);

  m.t_recover = recovery_latency(in.demand_bits, act.phi, cfg.y_exp,
                                 cfg.cycles_per_bit, act.f_edge_hz);

  m.t_sync = m.t_extract + m.t_uplink + m.t_recover;
  m.t_total = m.t_sense + m.t_sync;
  m.e_total = m.e_sense + m.e_extract + m.e_uplink;
  return m;
}

SlotMetrics evaluate_slot(const SystemConfig& cfg,
                          const std::vector<UdSlotInput>& inputs,
                          const std::vector<UdAction>& actions) {
  if (inputs.size() != static_cast<std::size_t>(cfg.num_uds) ||
      actions.size() != inputs.size()) {
    throw std::invalid_argument("evaluate_slot: need one input and one action per UD");
  }
  SlotMetrics slot;
  slot.ud.reserve(inputs.size());
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    slot.ud.push_back(evaluate_ud(cfg, inputs[k], actions[k]));
    slot.t_slot += slot.ud.back().t_total;
  }
  return slot;
}

}  // namespace dtsync::sim

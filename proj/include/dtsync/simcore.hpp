#pragma once

#include <vector>

#include "dtsync/config.hpp"

// Pure per-slot synchronization formulas. Deterministic, stateless,
// safe to call concurrently.

namespace dtsync::sim {

/// Per-UD physical inputs for one slot.
struct UdSlotInput {
  double demand_bits = 0.0;   // D
  double distance_m = 0.0;    // d, UD to base station
  double fading_power = 1.0;  // |g_NLoS|^2
};

/// Per-UD decision variables, in physical units.
struct UdAction {
  double phi = 1.0;       // semantic extraction factor, in [phi_min, 1]
  double f_loc_hz = 0.0;  // local CPU frequency
  double p_tx_w = 0.0;    // transmit power
  double f_edge_hz = 0.0; // edge CPU share
};

/// Latency/energy breakdown for one UD in one slot.
struct UdMetrics {
  double t_sense = 0.0;
  double t_extract = 0.0;
  double t_uplink = 0.0;
  double t_recover = 0.0;
  double t_sync = 0.0;   // extract + uplink + recover
  double t_total = 0.0;  // sense + sync
  double e_sense = 0.0;
  double e_extract = 0.0;
  double e_uplink = 0.0;
  double e_total = 0.0;
  double rate_bps = 0.0;
};

struct SlotMetrics {
  std::vector<UdMetrics> ud;
  double t_slot = 0.0;  // sum of t_total over UDs
};

double sense_latency(double demand_bits, double sense_rate_bps);
double sense_energy(double demand_bits, double energy_per_bit);
double extraction_demand(double demand_bits, double phi, double x_exp);
double extraction_latency(double lambda_bits, double cycles_per_bit,
                          double f_loc_hz);
double extraction_energy(double lambda_bits, double cycles_per_bit,
                         double k_loc, double f_loc_hz);
double channel_power_gain(double distance_m, double beta0, double pathloss_exp,
                          double fading_power);
double uplink_rate(double bandwidth_hz, double p_tx_w, double power_gain,
                   double noise_w);
double uplink_latency(double demand_bits, double phi, double rate_bps);
double uplink_energy(double t_uplink, double p_tx_w);
double recovery_latency(double demand_bits, double phi, double y_exp,
                        double cycles_per_bit, double f_edge_hz);

UdMetrics evaluate_ud(const SystemConfig& cfg, const UdSlotInput& in,
                      const UdAction& act);

/// Composes the full per-UD chain for each UD; requires one input and one
/// action per configured UD.
SlotMetrics evaluate_slot(const SystemConfig& cfg,
                          const std::vector<UdSlotInput>& inputs,
                          const std::vector<UdAction>& actions);

}  // namespace dtsync::sim

#pragma once

#include <array>
#include <string>

namespace dtsync {

/// Gauss-Markov mobility parameters and the initial spawn region.
struct MobilityParams {
  double rho = 0.8;           // velocity/heading memory
  double v_mean = 0.5;        // m/s, long-run mean speed
  double v_max = 1.0;         // m/s, hard clamp
  double sigma_v = 0.1;       // m/s
  double sigma_theta = 0.2;   // rad
  std::array<double, 3> spawn_center{50.0, 0.0, 0.0};
  double spawn_radius = 5.0;  // m
};

/// All physical and problem constants, in raw SI units (bits, s, Hz, W, J).
/// dB/dBm quantities are converted once at config load.
struct SystemConfig {
  int num_uds = 6;       // K
  int num_slots = 25;    // N
  double cycle_s = 30.0; // T; slot length tau = T/N
  double eta = 0.25;     // sensing fraction of each slot

  double bandwidth_hz = 0.2e6;  // total uplink bandwidth B; per-UD share B/K
  double noise_w = 1e-11;       // sigma^2 (-80 dBm)
  double beta0 = 1e-3;          // reference power gain (-30 dB)
  double pathloss_exp = -2.0;   // alpha3, applied as d^alpha3

  double cycles_per_bit = 300.0;  // C
  double k_loc = 1e-27;           // effective capacitance coefficient
  double x_exp = 1.2;             // extraction workload exponent
  double y_exp = 1.5;             // recovery workload exponent

  double d_min_bits = 0.6e6;
  double d_max_bits = 0.8e6;
  double phi_min = 0.4;

  double f_u_max_hz = 1e9;
  double f_e_max_hz = 10e9;
  double p_min_w = 0.01;
  double p_max_w = 0.1;
  double e_u_max_j = 0.5;

  double sense_rate_bps = 4e6;          // v_s
  double sense_energy_j_per_bit = 1e-8; // p_s

  double penalty_weight = 10.0;  // W
  std::array<double, 3> bs_pos{0.0, 0.0, 0.0};
  double d_ref_m = 100.0;  // state normalization constant

  // action decoding: lower fractions keep latencies finite, kappa widens
  // the per-UD edge-frequency interval so the cap can be violated
  double f_loc_min_frac = 0.01;
  double f_edge_min_frac = 0.01;
  double f_edge_kappa = 2.0;

  MobilityParams mobility;

  double tau() const { return cycle_s / num_slots; }
  double bandwidth_per_ud() const { return bandwidth_hz / num_uds; }
  double sensing_capacity_bits() const { return eta * tau() * sense_rate_bps; }
  double sensing_budget_j() const {
    return sense_energy_j_per_bit * sensing_capacity_bits();
  }

  /// Throws std::invalid_argument listing every violated invariant.
  void validate() const;
};

double db_to_linear(double db);
double dbm_to_watts(double dbm);

}  // namespace dtsync

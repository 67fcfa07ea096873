#include "dtsync/config.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dtsync {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

void SystemConfig::validate() const {
  std::string errs;
  auto require = [&](bool ok, const char* msg) {
    if (!ok) {
      errs += errs.empty() ? "" : "; ";
      errs += msg;
    }
  };

  require(num_uds >= 1, "num_uds must be >= 1");
  require(num_slots >= 1, "num_slots must be >= 1");
  require(cycle_s > 0.0, "cycle_s must be positive");
  require(eta >= 0.0 && eta <= 1.0, "eta must lie in [0,1]");
  require(bandwidth_hz > 0.0, "bandwidth_hz must be positive");
  require(noise_w > 0.0, "noise_w must be positive");
  require(beta0 > 0.0, "beta0 must be positive");
  require(cycles_per_bit > 0.0, "cycles_per_bit must be positive");
  require(k_loc > 0.0, "k_loc must be positive");
  require(x_exp > 0.0, "x_exp must be positive");
  require(y_exp > 0.0, "y_exp must be positive");
  require(d_min_bits > 0.0, "d_min_bits must be positive");
  require(d_min_bits <= d_max_bits, "d_min_bits must not exceed d_max_bits");
  require(phi_min > 0.0 && phi_min <= 1.0, "phi_min must lie in (0,1]");
  require(f_u_max_hz > 0.0, "f_u_max_hz must be positive");
  require(f_e_max_hz > 0.0, "f_e_max_hz must be positive");
  require(p_min_w > 0.0, "p_min_w must be positive");
  require(p_min_w <= p_max_w, "p_min_w must not exceed p_max_w");
  require(e_u_max_j > 0.0, "e_u_max_j must be positive");
  require(sense_rate_bps > 0.0, "sense_rate_bps must be positive");
  require(sense_energy_j_per_bit >= 0.0, "sense_energy_j_per_bit must be >= 0");
  require(penalty_weight >= 0.0, "penalty_weight must be >= 0");
  require(d_ref_m > 0.0, "d_ref_m must be positive");
  require(f_loc_min_frac > 0.0 && f_loc_min_frac <= 1.0,
          "f_loc_min_frac must lie in (0,1]");
  require(f_edge_min_frac > 0.0, "f_edge_min_frac must be positive");
  require(f_edge_kappa >= f_edge_min_frac, "f_edge_kappa below its floor");
  // sensing deadline: eta*tau*v_s >= d_max keeps t_s <= eta*tau attainable
  require(sensing_capacity_bits() >= d_max_bits,
          "sensing capacity eta*tau*sense_rate below d_max_bits");
  require(mobility.rho >= 0.0 && mobility.rho <= 1.0, "mobility.rho in [0,1]");
  require(mobility.v_max >= 0.0, "mobility.v_max must be >= 0");
  require(mobility.sigma_v >= 0.0, "mobility.sigma_v must be >= 0");
  require(mobility.sigma_theta >= 0.0, "mobility.sigma_theta must be >= 0");
  require(mobility.spawn_radius >= 0.0, "mobility.spawn_radius must be >= 0");

  if (!errs.empty()) throw std::invalid_argument("invalid config: " + errs);
}

}  // namespace dtsync

#pragma once

#include <array>

#include "dtsync/config.hpp"
#include "dtsync/rng.hpp"

// Stochastic slot-to-slot evolution: Gauss-Markov mobility, Rayleigh
// fading power draws and per-slot data demands, all under seeded streams.

namespace dtsync::dyn {

using Vec3 = std::array<double, 3>;

struct UdState {
  Vec3 pos{0.0, 0.0, 0.0};  // z stays 0; devices move in the plane
  double speed = 0.0;       // m/s
  double heading = 0.0;     // rad
  double demand_bits = 0.0;
  double fading_power = 1.0;
};

double distance(const Vec3& a, const Vec3& b);

/// One-step speed/heading evolution:
///   v' = rho*v + (1-rho)*v_mean + sqrt(1-rho^2)*sigma_v*xi1, clamped to [0, v_max]
///   th' = th + sqrt(1-rho^2)*sigma_theta*xi2   (heading mean is the current heading)
void evolve_gauss_markov(double& speed, double& heading,
                         const MobilityParams& mp, rng::RngStream& rng);

/// Position advances with the pre-update speed/heading, then both evolve.
void step_mobility(UdState& st, double tau, const MobilityParams& mp,
                   rng::RngStream& rng);

/// |g|^2 = a^2 + b^2 with a,b ~ Normal(0, 1/2): unit-mean exponential.
double sample_fading(rng::RngStream& rng);

double sample_demand(rng::RngStream& rng, double d_min, double d_max);

/// Spawn uniformly in the configured disk, heading uniform on [0, 2pi),
/// speed at the mobility mean, with initial demand and fading drawn.
UdState init_ud_state(const SystemConfig& cfg, rng::RngStream& rng);

}  // namespace dtsync::dyn

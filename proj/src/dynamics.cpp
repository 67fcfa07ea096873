#include "dtsync/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dtsync::dyn {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void evolve_gauss_markov(double& speed, double& heading,
                         const MobilityParams& mp, rng::RngStream& rng) {
  const double w = std::sqrt(std::max(0.0, 1.0 - mp.rho * mp.rho));
  const double xi_v = rng.normal();
  const double xi_t = rng.normal();
  speed = mp.rho * speed + (1.0 - mp.rho) * mp.v_mean + w * mp.sigma_v * xi_v;
  speed = std::clamp(speed, 0.0, mp.v_max);
  heading = heading + w * mp.sigma_theta * xi_t;
}

void step_mobility(UdState& st, double tau, const MobilityParams& mp,
                   rng::RngStream& rng) {
  st.pos[0] += st.speed * std::cos(st.heading) * tau;
  st.pos[1] += st.speed * std::sin(st.heading) * tau;
  evolve_gauss_markov(st.speed, st.heading, mp, rng);
}

double sample_fading(rng::RngStream& rng) {
  const double a = rng.normal() * 0.7071067811865476;  // sqrt(1/2)
  const double b = rng.normal() * 0.7071067811865476;
  return a * a + b * b;
}

double sample_demand(rng::RngStream& rng, double d_min, double d_max) {
  if (d_min > d_max)
    throw std::domain_error("sample_demand: inverted bounds");
  return rng.uniform(d_min, d_max);
}

UdState init_ud_state(const SystemConfig& cfg, rng::RngStream& rng) {
  UdState st;
  const double r = cfg.mobility.spawn_radius * std::sqrt(rng.uniform01());
  const double ang = kTwoPi * rng.uniform01();
  st.pos[0] = cfg.mobility.spawn_center[0] + r * std::cos(ang);
  st.pos[1] = cfg.mobility.spawn_center[1] + r * std::sin(ang);
  st.pos[2] = 0.0;
  st.heading = kTwoPi * rng.uniform01();
  st.speed = cfg.mobility.v_mean;
  st.demand_bits = sample_demand(rng, cfg.d_min_bits, cfg.d_max_bits);
  st.fading_power = sample_fading(rng);
  return st;
}

}  // namespace dtsync::dyn

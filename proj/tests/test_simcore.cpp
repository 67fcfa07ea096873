#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dtsync/rng.hpp"
#include "dtsync/simcore.hpp"

using namespace dtsync;
using doctest::Approx;

namespace {

// four significant figures
bool close4(double value, double expected) {
  return std::fabs(value - expected) <= 5e-4 * std::fabs(expected);
}

SystemConfig defaults() { return SystemConfig{}; }

sim::UdSlotInput chain_input() { return {0.7e6, 50.0, 1.0}; }
sim::UdAction chain_action() { return {0.5, 1e9, 0.1, 2e9}; }

}  // namespace

TEST_CASE("sense latency and energy") {
  CHECK(sim::sense_latency(0.8e6, 4e6) == Approx(0.2).epsilon(1e-12));
  CHECK(sim::sense_latency(0.6e6, 4e6) == Approx(0.15).epsilon(1e-12));
  CHECK(sim::sense_energy(0.8e6, 1e-8) == Approx(0.008).epsilon(1e-12));
  CHECK(sim::sense_energy(0.0, 1e-8) == 0.0);
  CHECK(sim::sense_energy(1.6e6, 1e-8) ==
        Approx(2.0 * sim::sense_energy(0.8e6, 1e-8)).epsilon(1e-12));
  // latency vanishes as the sensing rate grows
  CHECK(sim::sense_latency(0.8e6, 1e18) < 1e-9);
  CHECK_THROWS_AS(sim::sense_latency(0.0, 4e6), std::domain_error);
  CHECK_THROWS_AS(sim::sense_latency(0.8e6, 0.0), std::domain_error);
  CHECK_THROWS_AS(sim::sense_energy(-1.0, 1e-8), std::domain_error);
}

TEST_CASE("extraction demand, latency, energy") {
  const double lam = sim::extraction_demand(0.7e6, 0.5, 1.2);
  CHECK(close4(lam, 1.6082e6));
  CHECK(sim::extraction_demand(0.7e6, 1.0, 1.2) == 0.7e6);
  CHECK(sim::extraction_demand(123.0, 1.0, 7.7) == 123.0);
  CHECK_THROWS_AS(sim::extraction_demand(1.0, 0.0, 1.2), std::domain_error);

  CHECK(close4(sim::extraction_latency(1.6082e6, 300, 1e9), 0.48246));
  CHECK(sim::extraction_latency(0.0, 300, 1e9) == 0.0);
  CHECK(sim::extraction_latency(1e6, 300, 0.5e9) ==
        Approx(2.0 * sim::extraction_latency(1e6, 300, 1e9)).epsilon(1e-12));
  CHECK_THROWS_AS(sim::extraction_latency(1e6, 300, 0.0), std::domain_error);

  CHECK(close4(sim::extraction_energy(1.6082e6, 300, 1e-27, 1e9), 0.48246));
  CHECK(sim::extraction_energy(1e6, 300, 1e-27, 0.0) == 0.0);
  CHECK(sim::extraction_energy(1e6, 300, 1e-27, 2e9) ==
        Approx(4.0 * sim::extraction_energy(1e6, 300, 1e-27, 1e9)).epsilon(1e-12));
}

TEST_CASE("channel gain and uplink") {
  CHECK(sim::channel_power_gain(50.0, 1e-3, -2.0, 1.0) == Approx(4e-7).epsilon(1e-12));
  CHECK(sim::channel_power_gain(50.0, 1e-3, -2.0, 0.0) == 0.0);
  CHECK(sim::channel_power_gain(1.0, 1e-3, -2.0, 0.37) == Approx(1e-3 * 0.37).epsilon(1e-12));
  CHECK_THROWS_AS(sim::channel_power_gain(0.0, 1e-3, -2.0, 1.0), std::domain_error);

  const double u = sim::uplink_rate(0.2e6 / 6.0, 0.1, 4e-7, 1e-11);
  CHECK(close4(u, 3.9888e5));
  CHECK(sim::uplink_rate(0.2e6 / 6.0, 0.0, 4e-7, 1e-11) == 0.0);
  CHECK(sim::uplink_rate(1e5, 0.2, 4e-7, 1e-11) > sim::uplink_rate(1e5, 0.1, 4e-7, 1e-11));
  CHECK_THROWS_AS(sim::uplink_rate(0.0, 0.1, 4e-7, 1e-11), std::domain_error);
  CHECK_THROWS_AS(sim::uplink_rate(1e5, 0.1, 4e-7, 0.0), std::domain_error);

  const double t_up = sim::uplink_latency(0.7e6, 0.5, 3.9888e5);
  CHECK(close4(t_up, 0.8775));
  CHECK(close4(sim::uplink_energy(t_up, 0.1), 0.08775));
  CHECK(sim::uplink_latency(0.0, 0.5, 3.9888e5) == 0.0);
  // linear in phi
  CHECK(sim::uplink_latency(0.7e6, 0.4, 1e5) ==
        Approx(0.5 * sim::uplink_latency(0.7e6, 0.8, 1e5)).epsilon(1e-12));
  CHECK_THROWS_AS(sim::uplink_latency(0.7e6, 0.5, 0.0), std::domain_error);
}

TEST_CASE("recovery latency") {
  CHECK(close4(sim::recovery_latency(0.7e6, 0.5, 1.5, 300, 2e9), 0.14849));
  CHECK(sim::recovery_latency(0.7e6, 1.0, 1.5, 300, 2e9) ==
        Approx(300.0 * 0.7e6 / 2e9).epsilon(1e-12));
  // decreasing in phi when y > 1
  CHECK(sim::recovery_latency(0.7e6, 0.6, 1.5, 300, 2e9) <
        sim::recovery_latency(0.7e6, 0.5, 1.5, 300, 2e9));
  CHECK_THROWS_AS(sim::recovery_latency(0.7e6, 0.0, 1.5, 300, 2e9), std::domain_error);
  CHECK_THROWS_AS(sim::recovery_latency(0.7e6, 0.5, 1.5, 300, 0.0), std::domain_error);
}

TEST_CASE("worked single-UD chain") {
  SystemConfig cfg = defaults();
  const sim::UdMetrics m = sim::evaluate_ud(cfg, chain_input(), chain_action());
  CHECK(close4(m.t_sense, 0.175));
  CHECK(close4(m.t_extract, 0.48246));
  CHECK(close4(m.t_uplink, 0.8775));
  CHECK(close4(m.t_recover, 0.14849));
  CHECK(close4(m.t_sync, 1.5085));
  CHECK(close4(m.t_total, 1.6835));
  CHECK(close4(m.e_total, 0.5772));
  // composition identities hold as written
  CHECK(m.t_sync == m.t_extract + m.t_uplink + m.t_recover);
  CHECK(m.t_total == m.t_sense + m.t_sync);
  CHECK(m.e_total == m.e_sense + m.e_extract + m.e_uplink);
}

TEST_CASE("slot symmetry: identical UDs sum to K times one UD") {
  SystemConfig cfg = defaults();
  cfg.num_uds = 4;
  std::vector<sim::UdSlotInput> inputs(4, chain_input());
  std::vector<sim::UdAction> actions(4, chain_action());
  const sim::SlotMetrics slot = sim::evaluate_slot(cfg, inputs, actions);
  const sim::UdMetrics one = sim::evaluate_ud(cfg, inputs[0], actions[0]);
  CHECK(slot.t_slot == Approx(4.0 * one.t_total).epsilon(1e-12));
  for (const auto& m : slot.ud) {
    CHECK(m.t_total == one.t_total);
    CHECK(m.e_total == one.e_total);
  }
  CHECK_THROWS_AS(sim::evaluate_slot(cfg, {chain_input()}, {chain_action()}),
                  std::invalid_argument);
}

TEST_CASE("random admissible inputs: oracle agreement and positivity") {
  SystemConfig cfg = defaults();
  rng::RngStream r(42);
  for (int i = 0; i < 1000; ++i) {
    const double D = r.uniform(cfg.d_min_bits, cfg.d_max_bits);
    const double d = r.uniform(20.0, 80.0);
    const double g2 = -std::log(r.uniform_pos01());  // exponential(1)
    const double phi = r.uniform(cfg.phi_min, 1.0);
    const double f = r.uniform(0.01 * cfg.f_u_max_hz, cfg.f_u_max_hz);
    const double p = r.uniform(cfg.p_min_w, cfg.p_max_w);
    const double fe = r.uniform(0.1e9, 2e9);

    const sim::UdMetrics m = sim::evaluate_ud(cfg, {D, d, g2}, {phi, f, p, fe});

    // straight-line recomputation
    const double lam = D / std::pow(phi, cfg.x_exp);
    const double t_en = cfg.cycles_per_bit * lam / f;
    const double e_en = cfg.cycles_per_bit * cfg.k_loc * lam * f * f;
    const double gain = cfg.beta0 * std::pow(d, cfg.pathloss_exp) * g2;
    const double u = (cfg.bandwidth_hz / cfg.num_uds) *
                     std::log2(1.0 + p * gain / cfg.noise_w);
    const double t_up = D * phi / u;
    const double t_de = cfg.cycles_per_bit * D * phi /
                        (std::pow(phi, cfg.y_exp) * fe);

    CHECK(m.t_extract == Approx(t_en).epsilon(1e-12));
    CHECK(m.e_extract == Approx(e_en).epsilon(1e-12));
    CHECK(m.t_uplink == Approx(t_up).epsilon(1e-12));
    CHECK(m.t_recover == Approx(t_de).epsilon(1e-12));
    CHECK(m.t_total == Approx(D / cfg.sense_rate_bps + t_en + t_up + t_de).epsilon(1e-12));
    CHECK(m.e_total >= 0.0);
    CHECK(m.t_total >= 0.0);
    // scale identity: e_en = k_loc * f^3 * t_en
    CHECK(m.e_extract == Approx(cfg.k_loc * f * f * f * m.t_extract).epsilon(1e-12));
  }
}

TEST_CASE("monotonicity over random admissible inputs") {
  SystemConfig cfg = defaults();
  rng::RngStream r(77);
  for (int i = 0; i < 300; ++i) {
    const double D = r.uniform(cfg.d_min_bits, cfg.d_max_bits);
    const double d = r.uniform(20.0, 80.0);
    const double phi = r.uniform(cfg.phi_min, 0.95);
    const double dphi = r.uniform(0.01, 1.0 - phi);
    const double f = r.uniform(0.1e9, 1e9);
    const double fe = r.uniform(0.1e9, 2e9);
    const double p = r.uniform(cfg.p_min_w, cfg.p_max_w * 0.9);

    // t_en decreasing in phi
    const double lam_lo = sim::extraction_demand(D, phi, cfg.x_exp);
    const double lam_hi = sim::extraction_demand(D, phi + dphi, cfg.x_exp);
    CHECK(sim::extraction_latency(lam_hi, cfg.cycles_per_bit, f) <
          sim::extraction_latency(lam_lo, cfg.cycles_per_bit, f));
    // t_up increasing in phi
    CHECK(sim::uplink_latency(D, phi + dphi, 1e5) > sim::uplink_latency(D, phi, 1e5));
    // t_de decreasing in phi for y > 1
    CHECK(sim::recovery_latency(D, phi + dphi, cfg.y_exp, cfg.cycles_per_bit, fe) <
          sim::recovery_latency(D, phi, cfg.y_exp, cfg.cycles_per_bit, fe));
    // rate increasing in power and in gain
    const double gain = sim::channel_power_gain(d, cfg.beta0, cfg.pathloss_exp, 1.0);
    CHECK(sim::uplink_rate(1e5, p + 0.005, gain, cfg.noise_w) >
          sim::uplink_rate(1e5, p, gain, cfg.noise_w));
    CHECK(sim::uplink_rate(1e5, p, gain * 1.5, cfg.noise_w) >
          sim::uplink_rate(1e5, p, gain, cfg.noise_w));
    // t_s decreasing in sensing rate
    CHECK(sim::sense_latency(D, 5e6) < sim::sense_latency(D, 4e6));
  }
}

TEST_CASE("feasibility witness at full resources") {
  SystemConfig cfg = defaults();
  for (double D = cfg.d_min_bits; D <= cfg.d_max_bits; D += 0.01e6) {
    sim::UdAction act{1.0, cfg.f_u_max_hz, cfg.p_max_w,
                      cfg.f_e_max_hz / cfg.num_uds};
    const sim::UdMetrics m = sim::evaluate_ud(cfg, {D, 50.0, 1.0}, act);
    CHECK(std::isfinite(m.t_total));
    CHECK(std::isfinite(m.e_total));
    CHECK(m.t_total > 0.0);
  }
}

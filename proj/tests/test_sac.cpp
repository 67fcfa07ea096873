#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "dtsync/env.hpp"
#include "dtsync/sac.hpp"

using namespace dtsync;
using doctest::Approx;

namespace {

sac::SacHyper small_hyper(int width = 16, double lr = 1e-3) {
  sac::SacHyper h;
  h.hidden_width = width;
  h.lr = lr;
  h.batch_size = 8;
  return h;
}

sac::Batch single_transition(int sdim, int adim, double reward, bool done,
                             std::uint64_t seed) {
  sac::Batch b;
  b.size = 1;
  b.state_dim = sdim;
  b.action_dim = adim;
  rng::RngStream r(seed);
  b.state.resize(sdim);
  b.action.resize(adim);
  b.next_state.resize(sdim);
  for (auto& v : b.state) v = r.uniform(-1.0, 1.0);
  for (auto& v : b.action) v = 0.9 * r.uniform(-1.0, 1.0);
  for (auto& v : b.next_state) v = r.uniform(-1.0, 1.0);
  b.reward = {reward};
  b.done = {std::uint8_t(done ? 1 : 0)};
  return b;
}

}  // namespace

TEST_CASE("squashed log density at the standard normal mode") {
  // xi = 0, sigma = 1, a = tanh(0) = 0
  const double lp = sac::squashed_log_density(0.0, 0.0, 0.0);
  CHECK(lp == Approx(-0.9189).epsilon(2e-4));
  CHECK(lp == Approx(-0.91893853320467274 - std::log(1.0 + 1e-6)).epsilon(1e-12));
}

TEST_CASE("policy sample: log_prob matches per-dimension recomputation") {
  auto hyper = small_hyper();
  rng::RngStream init(40);
  auto agent = sac::make_agent(4, 6, hyper, init);
  std::vector<double> state{0.5, -0.2, 0.8, 0.1};
  rng::RngStream r(41);
  const auto s = sac::sample_policy(agent, state, hyper, r);
  CHECK(s.raw.size() == 6);
  double lp = 0.0;
  for (int d = 0; d < 6; ++d) {
    CHECK(s.raw[d] > -1.0);
    CHECK(s.raw[d] < 1.0);
    lp += sac::squashed_log_density(s.xi[d], s.log_sigma[d], s.raw[d]);
  }
  CHECK(lp == Approx(s.log_prob).epsilon(1e-12));
}

TEST_CASE("deterministic mode returns tanh of the mean head") {
  auto hyper = small_hyper();
  rng::RngStream init(42);
  auto agent = sac::make_agent(3, 2, hyper, init);
  std::vector<double> state{0.3, 0.7, -0.5};
  const auto raw = sac::mean_action(agent, state);
  const auto head = nn::forward(agent.policy, state);
  CHECK(raw[0] == Approx(std::tanh(head[0])).epsilon(1e-15));
  CHECK(raw[1] == Approx(std::tanh(head[1])).epsilon(1e-15));
}

TEST_CASE("pinned dimensions emit the upper endpoint and no density") {
  auto hyper = small_hyper();
  rng::RngStream init(43);
  auto agent = sac::make_agent(2, 4, hyper, init);
  std::vector<std::uint8_t> pin{1, 1, 0, 0};
  std::vector<double> state{0.1, 0.2};
  rng::RngStream r(44);
  const auto s = sac::sample_policy(agent, state, hyper, r, &pin);
  CHECK(s.raw[0] == env::kRawUpper);
  CHECK(s.raw[1] == env::kRawUpper);
  double lp = 0.0;
  for (int d = 2; d < 4; ++d)
    lp += sac::squashed_log_density(s.xi[d], s.log_sigma[d], s.raw[d]);
  CHECK(lp == Approx(s.log_prob).epsilon(1e-12));
}

TEST_CASE("squashed standard normal entropy (Monte Carlo vs quadrature)") {
  // a freshly zeroed policy head gives mu = 0, log sigma = 0
  auto hyper = small_hyper();
  rng::RngStream init(45);
  auto agent = sac::make_agent(1, 1, hyper, init);
  agent.policy.zero();

  // quadrature for E[-log pi] = h(N(0,1)) + E[log(1 - tanh(u)^2 + eps)]
  double quad = 0.0;
  const int n = 40001;
  const double lo = -10.0, hi = 10.0, dx = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) {
    const double u = lo + i * dx;
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    const double pdf = std::exp(-0.5 * u * u) / std::sqrt(2.0 * M_PI);
    const double t = std::tanh(u);
    const double neg_logp = 0.5 * std::log(2.0 * M_PI) + 0.5 * u * u +
                            std::log(1.0 - t * t + 1e-6);
    quad += w * pdf * neg_logp * dx;
  }

  rng::RngStream r(46);
  const std::vector<double> state{0.0};
  double mc = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i)
    mc -= sac::sample_policy(agent, state, hyper, r).log_prob / draws;

  CHECK(std::fabs(mc - quad) < 0.02);
  // about 0.67 nats, i.e. about 0.96 bits
  CHECK(quad == Approx(0.670).epsilon(0.02));
  CHECK(mc / std::log(2.0) == Approx(0.96).epsilon(0.06));
}

TEST_CASE("soft targets: terminal and gamma=0 reduce to the reward") {
  auto hyper = small_hyper();
  rng::RngStream init(50);
  auto agent = sac::make_agent(3, 2, hyper, init);

  auto done_batch = single_transition(3, 2, -1.25, true, 1);
  rng::RngStream r1(2);
  CHECK(sac::soft_targets(agent, done_batch, hyper, r1)[0] == -1.25);

  auto live = single_transition(3, 2, 0.4, false, 3);
  auto zero_gamma = hyper;
  zero_gamma.gamma = 0.0;
  rng::RngStream r2(4);
  CHECK(sac::soft_targets(agent, live, zero_gamma, r2)[0] == 0.4);
}

TEST_CASE("soft targets: one live transition matches direct recomputation") {
  auto hyper = small_hyper();
  rng::RngStream init(51);
  auto agent = sac::make_agent(3, 2, hyper, init);
  agent.log_alpha = std::log(0.37);
  auto b = single_transition(3, 2, 0.4, false, 5);

  rng::RngStream ra(99), rb(99);
  const double y = sac::soft_targets(agent, b, hyper, ra)[0];

  const std::vector<double> s2(b.next_state.begin(), b.next_state.end());
  const auto next = sac::sample_policy(agent, s2, hyper, rb);
  std::vector<double> x = s2;
  x.insert(x.end(), next.raw.begin(), next.raw.end());
  const double q1 = nn::forward(agent.q1_target, x)[0];
  const double q2 = nn::forward(agent.q2_target, x)[0];
  const double want =
      0.4 + hyper.gamma * (std::min(q1, q2) - 0.37 * next.log_prob);
  CHECK(y == Approx(want).epsilon(1e-12));
}

TEST_CASE("critic update: stationary at the target, quadratic in an offset") {
  auto hyper = small_hyper();
  rng::RngStream init(52);
  auto agent = sac::make_agent(2, 2, hyper, init);
  auto b = single_transition(2, 2, 0.0, true, 6);

  std::vector<double> x(b.state.begin(), b.state.end());
  x.insert(x.end(), b.action.begin(), b.action.end());
  const double q1 = nn::forward(agent.q1, x)[0];
  const double q2 = nn::forward(agent.q2, x)[0];

  SUBCASE("zero residual, zero gradient, parameters untouched") {
    const auto before1 = agent.q1.flat();
    // per-critic targets differ; drive q1 to stationarity, then q2
    const std::vector<double> y1{q1};
    sac::AgentParams copy = agent;
    const auto losses = sac::critic_update(copy, b, y1, hyper);
    CHECK(losses.first == 0.0);
    CHECK(copy.q1.flat() == before1);
  }

  SUBCASE("constant offset c gives loss c^2/2") {
    const double c = 0.8;
    const std::vector<double> y{q1 - c};
    sac::AgentParams copy = agent;
    const auto losses = sac::critic_update(copy, b, y, hyper);
    CHECK(losses.first == Approx(0.5 * c * c).epsilon(1e-12));
    CHECK(losses.second == Approx(0.5 * (q2 - (q1 - c)) * (q2 - (q1 - c))).epsilon(1e-12));
  }
}

TEST_CASE("critic update: regression onto a fixed synthetic batch") {
  sac::SacHyper hyper = small_hyper(64, 1e-2);
  rng::RngStream init(53);
  auto agent = sac::make_agent(4, 4, hyper, init);

  sac::Batch b;
  b.size = 64;
  b.state_dim = 4;
  b.action_dim = 4;
  rng::RngStream r(54);
  b.state.resize(b.size * 4);
  b.action.resize(b.size * 4);
  b.next_state.assign(b.size * 4, 0.0);
  b.done.assign(b.size, 1);
  b.reward.assign(b.size, 0.0);
  for (auto& v : b.state) v = r.uniform(-1.0, 1.0);
  for (auto& v : b.action) v = r.uniform(-1.0, 1.0);
  std::vector<double> y(b.size);
  for (auto& v : y) v = r.uniform(-1.0, 1.0);

  double l1 = 1e9, l2 = 1e9;
  for (int i = 0; i < 500; ++i)
    std::tie(l1, l2) = sac::critic_update(agent, b, y, hyper);
  CHECK(l1 < 1e-3);
  CHECK(l2 < 1e-3);
}

TEST_CASE("actor update: flat objective leaves the policy unchanged") {
  auto hyper = small_hyper();
  rng::RngStream init(55);
  auto agent = sac::make_agent(2, 2, hyper, init);
  agent.q1.zero();  // Q identically zero: no action preference
  agent.q2.zero();
  agent.log_alpha = -745.0;  // alpha underflows to zero
  const auto before = agent.policy.flat();
  auto b = single_transition(2, 2, 0.0, false, 7);
  rng::RngStream r(8);
  double mean_logp = 0.0;
  sac::actor_update(agent, b, hyper, r, mean_logp);
  CHECK(agent.policy.flat() == before);
}

TEST_CASE("actor update: gradient matches finite differences on a frozen batch") {
  auto hyper = small_hyper(12);
  rng::RngStream init(56);
  auto agent = sac::make_agent(3, 2, hyper, init);
  agent.log_alpha = std::log(0.5);
  sac::Batch b = single_transition(3, 2, 0.0, false, 9);
  b.size = 4;
  rng::RngStream rfill(10);
  b.state.resize(12);
  b.action.resize(8);
  b.next_state.assign(12, 0.0);
  b.reward.assign(4, 0.0);
  b.done.assign(4, 1);
  for (auto& v : b.state) v = rfill.uniform(-1.0, 1.0);
  for (auto& v : b.action) v = 0.5 * rfill.uniform(-1.0, 1.0);

  const std::uint64_t noise_seed = 777;
  auto loss_at = [&](const nn::ParamSet& pol) {
    sac::AgentParams copy = agent;
    copy.policy = pol;
    rng::RngStream nr(noise_seed);
    double mlp = 0.0;
    return sac::actor_update(copy, b, hyper, nr, mlp);
  };

  nn::ParamSet grad(agent.policy.spec());
  {
    sac::AgentParams copy = agent;
    rng::RngStream nr(noise_seed);
    double mlp = 0.0;
    sac::actor_update(copy, b, hyper, nr, mlp, nullptr, &grad);
  }

  rng::RngStream rdir(11);
  const double h = 1e-5;
  for (int rep = 0; rep < 4; ++rep) {
    std::vector<double> dir(agent.policy.size());
    double norm = 0.0;
    for (auto& d : dir) {
      d = rdir.normal();
      norm += d * d;
    }
    norm = std::sqrt(norm);
    nn::ParamSet plus = agent.policy, minus = agent.policy;
    double an = 0.0;
    for (std::size_t i = 0; i < dir.size(); ++i) {
      dir[i] /= norm;
      plus.flat()[i] += h * dir[i];
      minus.flat()[i] -= h * dir[i];
      an += grad.flat()[i] * dir[i];
    }
    const double fd = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
    const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-8});
    CHECK(std::fabs(fd - an) / denom < 1e-3);
  }
}

TEST_CASE("actor update: bandit with a known optimum") {
  // critics pre-fit to Q(s, a) = -(a - 0.5)^2, then the policy mean should
  // move to tanh(mu) near 0.5
  sac::SacHyper hyper = small_hyper(32, 1e-2);
  rng::RngStream init(57);
  auto agent = sac::make_agent(1, 1, hyper, init);
  agent.log_alpha = std::log(1e-6);  // negligible entropy pressure

  sac::Batch fit;
  fit.size = 128;
  fit.state_dim = 1;
  fit.action_dim = 1;
  fit.state.assign(fit.size, 0.0);
  fit.next_state.assign(fit.size, 0.0);
  fit.reward.assign(fit.size, 0.0);
  fit.done.assign(fit.size, 1);
  fit.action.resize(fit.size);
  rng::RngStream r(58);
  std::vector<double> y(fit.size);
  for (int i = 0; i < fit.size; ++i) {
    fit.action[i] = r.uniform(-0.99, 0.99);
    y[i] = -(fit.action[i] - 0.5) * (fit.action[i] - 0.5);
  }
  for (int i = 0; i < 3000; ++i) sac::critic_update(agent, fit, y, hyper);

  rng::RngStream ar(59);
  double mean_logp = 0.0;
  for (int i = 0; i < 2000; ++i)
    sac::actor_update(agent, fit, hyper, ar, mean_logp);

  const auto act = sac::mean_action(agent, std::vector<double>{0.0});
  CHECK(act[0] == Approx(0.5).epsilon(0.1));
}

TEST_CASE("alpha update: stationarity and direction") {
  auto hyper = small_hyper();
  rng::RngStream init(60);
  auto agent = sac::make_agent(2, 2, hyper, init);
  agent.target_entropy = -2.0;

  SUBCASE("exact stationarity leaves alpha untouched") {
    const double la = agent.log_alpha;
    sac::alpha_update(agent, /*mean_log_prob=*/2.0);  // logp = -H0
    CHECK(agent.log_alpha == la);
  }

  SUBCASE("entropy below target raises alpha") {
    // E[-logp] = -2.5 < -2 = H0
    const double before = agent.alpha();
    for (int i = 0; i < 50; ++i) sac::alpha_update(agent, 2.5);
    CHECK(agent.alpha() > before);
  }

  SUBCASE("entropy above target lowers alpha") {
    const double before = agent.alpha();
    for (int i = 0; i < 50; ++i) sac::alpha_update(agent, -2.5);
    CHECK(agent.alpha() < before);
  }

  SUBCASE("fixed entropy above target drives the gradient to zero") {
    agent.alpha_opt.lr = 5e-2;
    agent.alpha_opt.beta2 = 0.99;  // short memory suits a decaying gradient
    const double mean_logp = -2.5;  // entropy 2.5 > -2
    double grad = 1.0;
    int steps = 0;
    for (; steps < 5000; ++steps) {
      sac::alpha_update(agent, mean_logp);
      grad = -agent.alpha() * (mean_logp + agent.target_entropy);
      if (std::fabs(grad) < 1e-4) break;
    }
    CHECK(std::fabs(grad) < 1e-4);
    CHECK(steps < 5000);
  }
}

TEST_CASE("target sync copies exactly at the configured cadence") {
  auto hyper = small_hyper();
  hyper.target_sync_every = 320;
  rng::RngStream init(61);
  auto agent = sac::make_agent(2, 2, hyper, init);
  auto b = single_transition(2, 2, 0.3, false, 12);
  const std::vector<double> y{0.0};

  const auto t1 = agent.q1_target.flat();
  for (int i = 1; i <= 319; ++i) {
    sac::critic_update(agent, b, y, hyper);
    ++agent.grad_steps;
    if (agent.grad_steps % hyper.target_sync_every == 0) sac::sync_targets(agent);
  }
  CHECK(agent.q1_target.flat() == t1);  // untouched so far
  CHECK(agent.q1.flat() != t1);

  rng::RngStream rt(13);
  const double y_before = sac::soft_targets(agent, b, hyper, rt)[0];

  sac::critic_update(agent, b, y, hyper);
  ++agent.grad_steps;
  if (agent.grad_steps % hyper.target_sync_every == 0) sac::sync_targets(agent);
  CHECK(agent.grad_steps == 320);
  CHECK(agent.q1_target.flat() == agent.q1.flat());
  CHECK(agent.q2_target.flat() == agent.q2.flat());

  rng::RngStream rt2(13);
  const double y_after = sac::soft_targets(agent, b, hyper, rt2)[0];
  CHECK(y_before != y_after);
}

TEST_CASE("soft target alpha sensitivity has the predicted sign") {
  auto hyper = small_hyper();
  rng::RngStream init(62);
  auto agent = sac::make_agent(3, 2, hyper, init);
  auto b = single_transition(3, 2, 0.0, false, 14);

  rng::RngStream r1(15), r2(15), r3(15);
  const auto next =
      sac::sample_policy(agent, std::vector<double>(b.next_state.begin(),
                                                    b.next_state.end()),
                         hyper, r3);
  const double y0 = sac::soft_targets(agent, b, hyper, r1)[0];
  agent.log_alpha += 0.5;
  const double y1 = sac::soft_targets(agent, b, hyper, r2)[0];
  // dy/dalpha = -gamma * logp: sign flips with the density
  if (next.log_prob < 0.0)
    CHECK(y1 > y0);
  else
    CHECK(y1 < y0);
}

TEST_CASE("replay buffer: FIFO eviction and near-uniform sampling") {
  sac::ReplayBuffer buf(100, 1, 1);
  rng::RngStream r(70);
  sac::Batch b;
  CHECK_THROWS_AS(buf.sample(r, 1, b), std::logic_error);

  for (int i = 0; i < 150; ++i) {
    const double s = double(i);
    const double a = 0.0;
    buf.push(&s, &a, double(i), &s, false);
  }
  CHECK(buf.size() == 100);

  // entries 0..49 were evicted
  std::vector<int> counts(150, 0);
  const int draws = 100000;
  sac::Batch batch;
  for (int i = 0; i < draws / 100; ++i) {
    buf.sample(r, 100, batch);
    for (int j = 0; j < batch.size; ++j) ++counts[int(batch.reward[j])];
  }
  int lo = draws, hi = 0;
  for (int i = 0; i < 50; ++i) CHECK(counts[i] == 0);
  for (int i = 50; i < 150; ++i) {
    lo = std::min(lo, counts[i]);
    hi = std::max(hi, counts[i]);
  }
  CHECK(hi < 2 * lo);  // no index twice as likely as another
}

TEST_CASE("train: rollout-only smoke and full determinism") {
  SystemConfig cfg;
  cfg.num_uds = 2;
  cfg.num_slots = 5;
  env::Environment e1(cfg), e2(cfg), e3(cfg);

  sac::SacHyper hyper = small_hyper(8);
  hyper.epochs = 1;
  hyper.steps_per_epoch = 25;
  hyper.batch_size = 10;

  sac::TrainOptions rollout;
  rollout.seed = 5;
  rollout.updates_enabled = false;
  std::vector<sac::EpisodeLog> logs1;
  rollout.on_episode = [&](const sac::EpisodeLog& l) { logs1.push_back(l); };
  const auto res1 = sac::train(e1, hyper, rollout);
  CHECK(res1.episodes == 5);
  CHECK(logs1.size() == 5);
  for (const auto& l : logs1) {
    CHECK(l.q1_loss == 0.0);  // no updates ran
    CHECK(l.ep_return < 0.0);
  }
  CHECK(res1.agent.grad_steps == 0);

  sac::TrainOptions full;
  full.seed = 5;
  std::vector<double> ret2, ret3;
  full.on_episode = [&](const sac::EpisodeLog& l) { ret2.push_back(l.ep_return); };
  sac::train(e2, hyper, full);
  full.on_episode = [&](const sac::EpisodeLog& l) { ret3.push_back(l.ep_return); };
  sac::train(e3, hyper, full);
  CHECK(ret2 == ret3);
}

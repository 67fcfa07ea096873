#include "dtsync/sac.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace dtsync::sac {

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178;  // ln(sqrt(2*pi))
constexpr double kSquashEps = 1e-6;
constexpr std::uint64_t kAgentStreamSalt = 0xA9EC7C0DE5ULL;

double clamp_raw(double v) {
  return std::clamp(v, -env::kRawUpper, env::kRawUpper);
}
}  // namespace

double ScalarAdam::update(double param, double grad) {
  ++step;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad * grad;
  const double mh = m / (1.0 - std::pow(beta1, step));
  const double vh = v / (1.0 - std::pow(beta2, step));
  return param - lr * mh / (std::sqrt(vh) + eps);
}

double AgentParams::alpha() const { return std::exp(log_alpha); }

AgentParams make_agent(int state_dim, int action_dim, const SacHyper& hyper,
                       rng::RngStream& rng) {
  if (state_dim < 1 || action_dim < 1)
    throw std::invalid_argument("make_agent: dimensions must be positive");
  nn::MlpSpec policy_spec{
      {state_dim, hyper.hidden_width, hyper.hidden_width, 2 * action_dim}};
  nn::MlpSpec critic_spec{
      {state_dim + action_dim, hyper.hidden_width, hyper.hidden_width, 1}};

  AgentParams a;
  a.state_dim = state_dim;
  a.action_dim = action_dim;
  a.policy = nn::ParamSet::glorot(policy_spec, rng);
  // keep initial actions near interval midpoints and sigma near 1
  a.policy.scale_layer(policy_spec.num_layers() - 1, 1e-2);
  a.q1 = nn::ParamSet::glorot(critic_spec, rng);
  a.q2 = nn::ParamSet::glorot(critic_spec, rng);
  a.q1_target = a.q1;
  a.q2_target = a.q2;
  a.policy_opt = nn::AdamState(a.policy.size(), hyper.lr);
  a.q1_opt = nn::AdamState(a.q1.size(), hyper.lr);
  a.q2_opt = nn::AdamState(a.q2.size(), hyper.lr);
  a.alpha_opt.lr = hyper.lr;
  a.log_alpha = 0.0;
  a.target_entropy = std::isnan(hyper.target_entropy)
                         ? -double(action_dim)
                         : hyper.target_entropy;
  return a;
}

double squashed_log_density(double xi, double log_sigma, double squashed) {
  return -kHalfLog2Pi - log_sigma - 0.5 * xi * xi -
         std::log(1.0 - squashed * squashed + kSquashEps);
}

namespace {

struct PolicyHeads {
  std::vector<double> mu, log_sigma;
  std::vector<std::uint8_t> clamp_mask;  // 1 where log sigma was not clamped
};

void policy_heads(const AgentParams& agent, std::span<const double> state,
                  const SacHyper& hyper, nn::Workspace& ws, PolicyHeads& out) {
  auto head = nn::forward(agent.policy, state, ws);
  const int adim = agent.action_dim;
  out.mu.assign(head.begin(), head.begin() + adim);
  out.log_sigma.resize(adim);
  out.clamp_mask.resize(adim);
  for (int d = 0; d < adim; ++d) {
    const double raw = head[adim + d];
    out.clamp_mask[d] =
        (raw > hyper.log_sigma_min && raw < hyper.log_sigma_max) ? 1 : 0;
    out.log_sigma[d] =
        std::clamp(raw, hyper.log_sigma_min, hyper.log_sigma_max);
  }
}

bool is_pinned(const std::vector<std::uint8_t>* pinned, int d) {
  return pinned != nullptr && (*pinned)[d] != 0;
}

}  // namespace

PolicySample sample_policy(const AgentParams& agent,
                           std::span<const double> state,
                           const SacHyper& hyper, rng::RngStream& rng,
                           const std::vector<std::uint8_t>* pinned) {
  nn::Workspace ws(agent.policy.spec());
  PolicyHeads heads;
  policy_heads(agent, state, hyper, ws, heads);

  const int adim = agent.action_dim;
  PolicySample s;
  s.mu = heads.mu;
  s.log_sigma = heads.log_sigma;
  s.raw.resize(adim);
  s.xi.assign(adim, 0.0);
  for (int d = 0; d < adim; ++d) {
    if (is_pinned(pinned, d)) {
      s.raw[d] = env::kRawUpper;
      continue;
    }
    const double xi = rng.normal();
    const double u = heads.mu[d] + std::exp(heads.log_sigma[d]) * xi;
    s.xi[d] = xi;
    s.raw[d] = clamp_raw(std::tanh(u));
    s.log_prob += squashed_log_density(xi, heads.log_sigma[d], s.raw[d]);
  }
  return s;
}

std::vector<double> mean_action(const AgentParams& agent,
                                std::span<const double> state,
                                const std::vector<std::uint8_t>* pinned) {
  nn::Workspace ws(agent.policy.spec());
  auto head = nn::forward(agent.policy, state, ws);
  std::vector<double> raw(agent.action_dim);
  for (int d = 0; d < agent.action_dim; ++d)
    raw[d] = is_pinned(pinned, d) ? env::kRawUpper : clamp_raw(std::tanh(head[d]));
  return raw;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, int state_dim, int action_dim)
    : capacity_(capacity), sdim_(state_dim), adim_(action_dim) {
  if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: zero capacity");
}

void ReplayBuffer::push(const double* state, const double* action,
                        double reward, const double* next_state, bool done) {
  if (size_ < capacity_) {
    s_.insert(s_.end(), state, state + sdim_);
    a_.insert(a_.end(), action, action + adim_);
    s2_.insert(s2_.end(), next_state, next_state + sdim_);
    r_.push_back(reward);
    done_.push_back(done ? 1 : 0);
    ++size_;
    return;
  }
  // FIFO overwrite
  std::copy(state, state + sdim_, s_.begin() + head_ * sdim_);
  std::copy(action, action + adim_, a_.begin() + head_ * adim_);
  std::copy(next_state, next_state + sdim_, s2_.begin() + head_ * sdim_);
  r_[head_] = reward;
  done_[head_] = done ? 1 : 0;
  head_ = (head_ + 1) % capacity_;
}

void ReplayBuffer::sample(rng::RngStream& rng, int batch, Batch& out) const {
  if (static_cast<std::size_t>(batch) > size_)
    throw std::logic_error("ReplayBuffer::sample: not enough transitions");
  out.size = batch;
  out.state_dim = sdim_;
  out.action_dim = adim_;
  out.state.resize(std::size_t(batch) * sdim_);
  out.action.resize(std::size_t(batch) * adim_);
  out.next_state.resize(std::size_t(batch) * sdim_);
  out.reward.resize(batch);
  out.done.resize(batch);
  for (int i = 0; i < batch; ++i) {
    const std::size_t idx = rng.uniform_index(size_);
    std::copy_n(s_.begin() + idx * sdim_, sdim_, out.state.begin() + i * sdim_);
    std::copy_n(a_.begin() + idx * adim_, adim_,
                out.action.begin() + i * adim_);
    std::copy_n(s2_.begin() + idx * sdim_, sdim_,
                out.next_state.begin() + i * sdim_);
    out.reward[i] = r_[idx];
    out.done[i] = done_[idx];
  }
}

std::vector<double> soft_targets(const AgentParams& agent, const Batch& batch,
                                 const SacHyper& hyper, rng::RngStream& rng,
                                 const std::vector<std::uint8_t>* pinned) {
  const double alpha = agent.alpha();
  std::vector<double> y(batch.size);
  std::vector<double> x(agent.state_dim + agent.action_dim);
  nn::Workspace wq1(agent.q1_target.spec()), wq2(agent.q2_target.spec());
  for (int i = 0; i < batch.size; ++i) {
    const double* s2 = batch.next_state_row(i);
    y[i] = batch.reward[i];
    if (batch.done[i]) continue;
    PolicySample next = sample_policy(
        agent, {s2, std::size_t(agent.state_dim)}, hyper, rng, pinned);
    std::copy_n(s2, agent.state_dim, x.begin());
    std::copy_n(next.raw.begin(), agent.action_dim,
                x.begin() + agent.state_dim);
    const double q1 = nn::forward(agent.q1_target, x, wq1)[0];
    const double q2 = nn::forward(agent.q2_target, x, wq2)[0];
    y[i] += hyper.gamma * (std::min(q1, q2) - alpha * next.log_prob);
  }
  return y;
}

std::pair<double, double> critic_update(AgentParams& agent, const Batch& batch,
                                        std::span<const double> targets,
                                        const SacHyper& hyper) {
  (void)hyper;
  if (targets.size() != static_cast<std::size_t>(batch.size))
    throw std::invalid_argument("critic_update: target size mismatch");
  const int xdim = agent.state_dim + agent.action_dim;
  std::vector<double> x(xdim);
  double losses[2] = {0.0, 0.0};

  nn::ParamSet* critics[2] = {&agent.q1, &agent.q2};
  nn::AdamState* opts[2] = {&agent.q1_opt, &agent.q2_opt};
  for (int c = 0; c < 2; ++c) {
    nn::ParamSet grad(critics[c]->spec());
    nn::Workspace ws(critics[c]->spec());
    const double inv_b = 1.0 / batch.size;
    for (int i = 0; i < batch.size; ++i) {
      std::copy_n(batch.state_row(i), agent.state_dim, x.begin());
      std::copy_n(batch.action_row(i), agent.action_dim,
                  x.begin() + agent.state_dim);
      const double q = nn::forward(*critics[c], x, ws)[0];
      const double diff = q - targets[i];
      losses[c] += 0.5 * diff * diff * inv_b;
      const double upstream = diff * inv_b;
      nn::backward(*critics[c], x, ws, {&upstream, 1}, grad);
    }
    nn::adam_step(*critics[c], grad, *opts[c]);
  }
  return {losses[0], losses[1]};
}

double actor_update(AgentParams& agent, const Batch& batch,
                    const SacHyper& hyper, rng::RngStream& rng,
                    double& mean_log_prob,
                    const std::vector<std::uint8_t>* pinned,
                    nn::ParamSet* grad_out) {
  const double alpha = agent.alpha();
  const int sdim = agent.state_dim;
  const int adim = agent.action_dim;
  const double inv_b = 1.0 / batch.size;

  nn::ParamSet pol_grad(agent.policy.spec());
  nn::Workspace wpol(agent.policy.spec());
  nn::Workspace wq1(agent.q1.spec()), wq2(agent.q2.spec());
  PolicyHeads heads;

  std::vector<double> x(sdim + adim);
  std::vector<double> input_grad(sdim + adim);
  std::vector<double> upstream(2 * adim);
  std::vector<double> xi(adim), a(adim);

  double loss = 0.0;
  mean_log_prob = 0.0;

  for (int i = 0; i < batch.size; ++i) {
    std::span<const double> s{batch.state_row(i), std::size_t(sdim)};
    policy_heads(agent, s, hyper, wpol, heads);

    double logp = 0.0;
    for (int d = 0; d < adim; ++d) {
      if (is_pinned(pinned, d)) {
        xi[d] = 0.0;
        a[d] = env::kRawUpper;
        continue;
      }
      xi[d] = rng.normal();
      const double u = heads.mu[d] + std::exp(heads.log_sigma[d]) * xi[d];
      a[d] = clamp_raw(std::tanh(u));
      logp += squashed_log_density(xi[d], heads.log_sigma[d], a[d]);
    }
    mean_log_prob += logp * inv_b;

    std::copy_n(s.begin(), sdim, x.begin());
    std::copy_n(a.begin(), adim, x.begin() + sdim);
    const double q1 = nn::forward(agent.q1, x, wq1)[0];
    const double q2 = nn::forward(agent.q2, x, wq2)[0];
    const double qmin = std::min(q1, q2);
    loss += (alpha * logp - qmin) * inv_b;

    // d(min Q)/d(action): backprop the smaller critic to its input only
    const double one = 1.0;
    if (q1 <= q2)
      nn::input_gradient(agent.q1, wq1, {&one, 1}, input_grad.data());
    else
      nn::input_gradient(agent.q2, wq2, {&one, 1}, input_grad.data());

    for (int d = 0; d < adim; ++d) {
      if (is_pinned(pinned, d)) {
        upstream[d] = 0.0;
        upstream[adim + d] = 0.0;
        continue;
      }
      const double tanh_grad = 1.0 - a[d] * a[d];
      const double dlogp_du =
          2.0 * a[d] * tanh_grad / (tanh_grad + kSquashEps);
      const double dq_da = input_grad[sdim + d];
      const double sigma_xi = std::exp(heads.log_sigma[d]) * xi[d];
      upstream[d] = (alpha * dlogp_du - dq_da * tanh_grad) * inv_b;
      double g_ls = (alpha * (-1.0 + dlogp_du * sigma_xi) -
                     dq_da * tanh_grad * sigma_xi) *
                    inv_b;
      upstream[adim + d] = heads.clamp_mask[d] ? g_ls : 0.0;
    }
    nn::backward(agent.policy, s, wpol, upstream, pol_grad);
  }

  if (grad_out != nullptr) *grad_out = pol_grad;
  nn::adam_step(agent.policy, pol_grad, agent.policy_opt);
  return loss;
}

double alpha_update(AgentParams& agent, double mean_log_prob) {
  const double grad =
      -agent.alpha() * (mean_log_prob + agent.target_entropy);
  agent.log_alpha = agent.alpha_opt.update(agent.log_alpha, grad);
  return agent.alpha();
}

void sync_targets(AgentParams& agent) {
  agent.q1_target = agent.q1;
  agent.q2_target = agent.q2;
}

TrainResult train(env::Environment& environment, const SacHyper& hyper,
                  const TrainOptions& options) {
  const int sdim = environment.state_dim();
  const int adim = environment.action_dim();
  const int k = environment.num_uds();

  rng::RngStream agent_rng(rng::mix_seed(options.seed, kAgentStreamSalt));
  AgentParams agent = make_agent(sdim, adim, hyper, agent_rng);

  std::vector<std::uint8_t> pin_storage;
  const std::vector<std::uint8_t>* pinned = nullptr;
  if (options.pin_phi) {
    pin_storage.assign(adim, 0);
    std::fill(pin_storage.begin(), pin_storage.begin() + k, 1);
    pinned = &pin_storage;
    if (std::isnan(hyper.target_entropy))
      agent.target_entropy = -double(adim - k);
  }

  const double scale =
      hyper.reward_scale == 0.0 ? 1.0 / k : hyper.reward_scale;
  ReplayBuffer buffer(hyper.buffer_capacity, sdim, adim);
  Batch batch;

  TrainResult result{std::move(agent), 0, 0};
  AgentParams& ag = result.agent;

  env::StateVec state = environment.reset(rng::mix_seed(options.seed, 0));

  double ep_return = 0.0, ep_latency = 0.0, ep_tsync = 0.0;
  double ep_pt = 0.0, ep_pe = 0.0, ep_pf = 0.0;
  double ep_l1 = 0.0, ep_l2 = 0.0;
  int ep_slots = 0, ep_updates = 0;

  const long total = long(hyper.epochs) * hyper.steps_per_epoch;
  for (long step = 1; step <= total; ++step) {
    PolicySample ps = sample_policy(ag, state, hyper, agent_rng, pinned);
    env::Transition tr = environment.step(ps.raw);
    buffer.push(state.data(), ps.raw.data(), tr.reward * scale,
                tr.next_state.data(), tr.done);

    const env::StepInfo& info = environment.last_step();
    ep_return += tr.reward;
    ep_latency += info.metrics.t_slot;
    for (const auto& m : info.metrics.ud) ep_tsync += m.t_sync;
    ep_pt += info.penalties.deadline;
    ep_pe += info.penalties.energy;
    ep_pf += info.penalties.edge;
    ++ep_slots;

    if (options.updates_enabled &&
        buffer.size() >= static_cast<std::size_t>(hyper.batch_size)) {
      buffer.sample(agent_rng, hyper.batch_size, batch);
      const std::vector<double> y =
          soft_targets(ag, batch, hyper, agent_rng, pinned);
      const auto [l1, l2] = critic_update(ag, batch, y, hyper);
      double mean_logp = 0.0;
      const double pol_loss =
          actor_update(ag, batch, hyper, agent_rng, mean_logp, pinned);
      const double alpha = alpha_update(ag, mean_logp);
      ++ag.grad_steps;
      if (ag.grad_steps % hyper.target_sync_every == 0) sync_targets(ag);
      if (!std::isfinite(l1) || !std::isfinite(l2) ||
          !std::isfinite(pol_loss) || !std::isfinite(alpha)) {
        char msg[160];
        std::snprintf(msg, sizeof(msg),
                      "train: non-finite loss at step %ld (q1=%g q2=%g "
                      "policy=%g alpha=%g)",
                      step, l1, l2, pol_loss, alpha);
        throw std::runtime_error(msg);
      }
      ep_l1 += l1;
      ep_l2 += l2;
      ++ep_updates;
    }

    if (tr.done) {
      EpisodeLog log;
      log.epoch = int((step - 1) / hyper.steps_per_epoch);
      log.global_step = step;
      log.episode = result.episodes;
      log.ep_return = ep_return;
      log.mean_latency = ep_latency / ep_slots;
      log.mean_t_sync = ep_tsync / (double(ep_slots) * k);
      log.pt_sum = ep_pt;
      log.pe_sum = ep_pe;
      log.pf_sum = ep_pf;
      log.alpha = ag.alpha();
      log.q1_loss = ep_updates ? ep_l1 / ep_updates : 0.0;
      log.q2_loss = ep_updates ? ep_l2 / ep_updates : 0.0;
      ++result.episodes;
      if (options.on_episode) options.on_episode(log);
      ep_return = ep_latency = ep_tsync = 0.0;
      ep_pt = ep_pe = ep_pf = 0.0;
      ep_l1 = ep_l2 = 0.0;
      ep_slots = ep_updates = 0;
      state = environment.reset(
          rng::mix_seed(options.seed, std::uint64_t(result.episodes)));
    } else {
      state = tr.next_state;
    }

    if (!options.checkpoint_dir.empty() &&
        step % hyper.steps_per_epoch == 0) {
      save_agent(options.checkpoint_dir, ag);
    }
    ++result.steps;
  }
  return result;
}

void save_agent(const std::string& dir, const AgentParams& agent) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nn::save_params(dir + "/policy.net", agent.policy);
  nn::save_params(dir + "/q1.net", agent.q1);
  nn::save_params(dir + "/q2.net", agent.q2);
  nn::save_params(dir + "/q1_target.net", agent.q1_target);
  nn::save_params(dir + "/q2_target.net", agent.q2_target);
  std::ofstream meta(dir + "/agent.meta");
  if (!meta) throw std::runtime_error("save_agent: cannot write meta in " + dir);
  meta.precision(17);
  meta << "state_dim " << agent.state_dim << "\n"
       << "action_dim " << agent.action_dim << "\n"
       << "log_alpha " << agent.log_alpha << "\n"
       << "target_entropy " << agent.target_entropy << "\n"
       << "grad_steps " << agent.grad_steps << "\n";
}

AgentParams load_agent(const std::string& dir) {
  AgentParams a;
  a.policy = nn::load_params(dir + "/policy.net");
  a.q1 = nn::load_params(dir + "/q1.net");
  a.q2 = nn::load_params(dir + "/q2.net");
  a.q1_target = nn::load_params(dir + "/q1_target.net");
  a.q2_target = nn::load_params(dir + "/q2_target.net");

  std::ifstream meta(dir + "/agent.meta");
  if (!meta) throw std::runtime_error("load_agent: missing meta in " + dir);
  std::string key;
  while (meta >> key) {
    if (key == "state_dim") meta >> a.state_dim;
    else if (key == "action_dim") meta >> a.action_dim;
    else if (key == "log_alpha") meta >> a.log_alpha;
    else if (key == "target_entropy") meta >> a.target_entropy;
    else if (key == "grad_steps") meta >> a.grad_steps;
    else throw std::runtime_error("load_agent: unknown meta key " + key);
  }
  if (a.state_dim < 1 || a.action_dim < 1)
    throw std::runtime_error("load_agent: corrupt meta in " + dir);
  if (a.policy.spec().input_dim() != a.state_dim ||
      a.policy.spec().output_dim() != 2 * a.action_dim ||
      a.q1.spec().input_dim() != a.state_dim + a.action_dim)
    throw std::runtime_error("load_agent: checkpoint/spec mismatch in " + dir);
  // optimizer state is not checkpointed; loaded agents are for evaluation
  a.policy_opt = nn::AdamState(a.policy.size(), 1e-4);
  a.q1_opt = nn::AdamState(a.q1.size(), 1e-4);
  a.q2_opt = nn::AdamState(a.q2.size(), 1e-4);
  return a;
}

}  // namespace dtsync::sac

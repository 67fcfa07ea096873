#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dtsync/env.hpp"
#include "dtsync/mlp.hpp"
#include "dtsync/rng.hpp"

// Soft actor-critic: tanh-squashed Gaussian policy, twin soft Q critics
// with hard-copied target networks, and automatic temperature tuning.

namespace dtsync::sac {

struct SacHyper {
  double lr = 1e-4;
  int batch_size = 256;
  std::size_t buffer_capacity = 1000000;
  double gamma = 0.99;
  int epochs = 20;
  int steps_per_epoch = 5000;
  int target_sync_every = 320;
  int hidden_width = 256;
  // NaN means -(number of free action dims)
  double target_entropy = std::numeric_limits<double>::quiet_NaN();
  // 0 means 1/K; learner-side only, logged metrics stay unscaled
  double reward_scale = 0.0;
  double log_sigma_min = -20.0;
  double log_sigma_max = 2.0;
};

struct ScalarAdam {
  double m = 0.0, v = 0.0;
  long step = 0;
  double lr = 1e-4;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  double update(double param, double grad);
};

struct AgentParams {
  nn::ParamSet policy, q1, q2, q1_target, q2_target;
  nn::AdamState policy_opt, q1_opt, q2_opt;
  double log_alpha = 0.0;
  ScalarAdam alpha_opt;
  double target_entropy = 0.0;
  long grad_steps = 0;
  int state_dim = 0;
  int action_dim = 0;

  double alpha() const;
};

AgentParams make_agent(int state_dim, int action_dim, const SacHyper& hyper,
                       rng::RngStream& rng);

/// Log density of one squashed-Gaussian dimension, written in terms of the
/// pre-squash noise xi = (u - mu)/sigma and the squashed value a = tanh(u):
///   -ln sqrt(2pi) - log_sigma - xi^2/2 - ln(1 - a^2 + 1e-6)
double squashed_log_density(double xi, double log_sigma, double squashed);

struct PolicySample {
  std::vector<double> raw;  // squashed action, strictly inside (-1,1)
  std::vector<double> mu, log_sigma, xi;
  double log_prob = 0.0;
};

/// Dims with pinned[d] != 0 emit env::kRawUpper, draw no noise, and are
/// excluded from the log probability.
PolicySample sample_policy(const AgentParams& agent,
                           std::span<const double> state,
                           const SacHyper& hyper, rng::RngStream& rng,
                           const std::vector<std::uint8_t>* pinned = nullptr);

/// Deterministic evaluation action: tanh of the policy mean.
std::vector<double> mean_action(const AgentParams& agent,
                                std::span<const double> state,
                                const std::vector<std::uint8_t>* pinned = nullptr);

struct Batch {
  int size = 0;
  int state_dim = 0;
  int action_dim = 0;
  std::vector<double> state, action, reward, next_state;
  std::vector<std::uint8_t> done;

  const double* state_row(int i) const { return state.data() + i * state_dim; }
  const double* action_row(int i) const {
    return action.data() + i * action_dim;
  }
  const double* next_state_row(int i) const {
    return next_state.data() + i * state_dim;
  }
};

class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int state_dim, int action_dim);

  void push(const double* state, const double* action, double reward,
            const double* next_state, bool done);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }

  /// Uniform sampling with replacement; requires size() >= batch.
  void sample(rng::RngStream& rng, int batch, Batch& out) const;

 private:
  std::size_t capacity_;
  int sdim_, adim_;
  std::size_t size_ = 0, head_ = 0;
  std::vector<double> s_, a_, r_, s2_;
  std::vector<std::uint8_t> done_;
};

/// y_i = r_i + gamma*(1-done_i)*(min(tq1,tq2)(s', a') - alpha*logpi(a'|s'))
/// with a' freshly sampled from the current policy.
std::vector<double> soft_targets(const AgentParams& agent, const Batch& batch,
                                 const SacHyper& hyper, rng::RngStream& rng,
                                 const std::vector<std::uint8_t>* pinned = nullptr);

/// One Adam step per critic on the mean of 0.5*(Q - y)^2; returns the losses.
std::pair<double, double> critic_update(AgentParams& agent, const Batch& batch,
                                        std::span<const double> targets,
                                        const SacHyper& hyper);

/// One Adam step on the policy for mean[alpha*logpi - min(Q1,Q2)] with
/// reparameterized actions; returns the loss and the batch-mean log prob.
/// grad_out, when set, receives the pre-step policy gradient.
double actor_update(AgentParams& agent, const Batch& batch,
                    const SacHyper& hyper, rng::RngStream& rng,
                    double& mean_log_prob,
                    const std::vector<std::uint8_t>* pinned = nullptr,
                    nn::ParamSet* grad_out = nullptr);

/// Temperature step on L(alpha) = -alpha*(mean_logpi + H0); returns alpha.
double alpha_update(AgentParams& agent, double mean_log_prob);

void sync_targets(AgentParams& agent);

struct EpisodeLog {
  int epoch = 0;
  long global_step = 0;
  int episode = 0;
  double ep_return = 0.0;     // unscaled env reward summed over the episode
  double mean_latency = 0.0;  // mean over slots of the per-slot latency total
  double mean_t_sync = 0.0;   // mean over slots and UDs of t_sync
  double pt_sum = 0.0, pe_sum = 0.0, pf_sum = 0.0;
  double alpha = 0.0;
  double q1_loss = 0.0, q2_loss = 0.0;  // mean over the episode's updates
};

struct TrainOptions {
  std::uint64_t seed = 1;
  bool updates_enabled = true;  // off = pure rollout / buffer fill
  bool pin_phi = false;         // freeze extraction factors at 1
  std::function<void(const EpisodeLog&)> on_episode;
  std::string checkpoint_dir;  // when set, saved after each epoch
};

struct TrainResult {
  AgentParams agent;
  int episodes = 0;
  long steps = 0;
};

/// Algorithm: epochs x steps interactions, one gradient update per step
/// once the buffer holds a batch, episode reset every N slots. Throws on
/// non-finite losses.
TrainResult train(env::Environment& environment, const SacHyper& hyper,
                  const TrainOptions& options);

/// One file per network plus a scalar record (log_alpha, step counter).
void save_agent(const std::string& dir, const AgentParams& agent);
AgentParams load_agent(const std::string& dir);

}  // namespace dtsync::sac

// Copyright 2026 The auvsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "auvsim/ppo.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace auvsim {

void PpoConfig::Validate() const {
  auto require = [](bool ok, const char* field, const char* message) {
    if (!ok) throw ParameterError(std::string("ppo.") + field, message);
  };
  require(learning_rate >= 0.0 && std::isfinite(learning_rate),
          "learning_rate", "must be a finite non-negative number");
  require(gamma > 0.0 && gamma <= 1.0, "gamma", "must lie in (0, 1]");
  require(gae_lambda > 0.0 && gae_lambda <= 1.0, "gae_lambda",
          "must lie in (0, 1]");
  require(clip > 0.0 && clip < 1.0, "clip", "must lie in (0, 1)");
  require(epochs > 0, "epochs", "must be positive");
  require(minibatches > 0, "minibatches", "must be positive");
  require(value_coef >= 0.0, "value_coef", "must be non-negative");
  require(entropy_coef >= 0.0, "entropy_coef", "must be non-negative");
  require(max_grad_norm > 0.0, "max_grad_norm", "must be positive");
  require(iterations > 0, "iterations", "must be positive");
  require(num_envs > 0, "num_envs", "must be positive");
  require(steps_per_iteration > 0, "steps_per_iteration", "must be positive");
  require(hidden > 0, "hidden", "must be positive");
  require(minibatches <= num_envs * steps_per_iteration, "minibatches",
          "must not exceed the rollout size");
  require(std::isfinite(init_log_std), "init_log_std", "must be finite");
}

RolloutBuffer::RolloutBuffer(int steps, int num_envs, int obs_dim,
                             int act_dim)
    : observations(obs_dim, steps * num_envs),
      actions(act_dim, steps * num_envs),
      log_probs(steps * num_envs),
      rewards(steps * num_envs),
      values(steps * num_envs),
      dones(steps * num_envs),
      advantages(steps * num_envs),
      returns(steps * num_envs),
      steps_(steps),
      num_envs_(num_envs) {}

void RolloutBuffer::Add(const Eigen::MatrixXd& obs,
                        const Eigen::MatrixXd& acts,
                        const Eigen::VectorXd& lp, const Eigen::VectorXd& r,
                        const Eigen::VectorXd& v,
                        const std::vector<uint8_t>& d) {
  if (full()) throw std::logic_error("rollout buffer is full");
  const int base = filled_ * num_envs_;
  observations.middleCols(base, num_envs_) = obs;
  actions.middleCols(base, num_envs_) = acts;
  log_probs.segment(base, num_envs_) = lp;
  rewards.segment(base, num_envs_) = r;
  values.segment(base, num_envs_) = v;
  for (int i = 0; i < num_envs_; ++i) dones[base + i] = d[i] ? 1.0 : 0.0;
  ++filled_;
}

void ComputeGae(RolloutBuffer& buffer, const Eigen::VectorXd& bootstrap,
                double gamma, double lambda) {
  if (!buffer.full()) {
    throw std::logic_error("advantages require a full rollout buffer");
  }
  const int n = buffer.num_envs();
  for (int env = 0; env < n; ++env) {
    double next_value = bootstrap[env];
    double next_advantage = 0.0;
    for (int t = buffer.steps() - 1; t >= 0; --t) {
      const int k = t * n + env;
      const double not_done = 1.0 - buffer.dones[k];
      const double delta = buffer.rewards[k] +
                           gamma * next_value * not_done - buffer.values[k];
      next_advantage = delta + gamma * lambda * not_done * next_advantage;
      buffer.advantages[k] = next_advantage;
      buffer.returns[k] = next_advantage + buffer.values[k];
      next_value = buffer.values[k];
    }
  }
}

void NormalizeAdvantages(Eigen::VectorXd& advantages) {
  const double mean = advantages.mean();
  advantages.array() -= mean;
  const double var = advantages.squaredNorm() / advantages.size();
  advantages /= std::sqrt(var) + 1e-8;
  // Re-center; the division can reintroduce a rounding-level offset.
  advantages.array() -= advantages.mean();
}

Minibatch GatherMinibatch(const RolloutBuffer& buffer,
                          std::span<const int> indices) {
  const int m = static_cast<int>(indices.size());
  Minibatch mb;
  mb.observations.resize(buffer.observations.rows(), m);
  mb.actions.resize(buffer.actions.rows(), m);
  mb.old_log_probs.resize(m);
  mb.advantages.resize(m);
  mb.returns.resize(m);
  for (int j = 0; j < m; ++j) {
    const int k = indices[j];
    mb.observations.col(j) = buffer.observations.col(k);
    mb.actions.col(j) = buffer.actions.col(k);
    mb.old_log_probs[j] = buffer.log_probs[k];
    mb.advantages[j] = buffer.advantages[k];
    mb.returns[j] = buffer.returns[k];
  }
  return mb;
}

LossStats PpoLoss(const PolicyNet& net, const Minibatch& batch,
                  const PpoConfig& cfg, Eigen::VectorXd* grad) {
  const Eigen::VectorXd& params = net.parameters();
  const int b = static_cast<int>(batch.observations.cols());
  const int act = net.shape().act_dim;
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);

  Mlp::Cache actor_cache;
  Mlp::Cache critic_cache;
  const Eigen::MatrixXd mean =
      net.actor().Forward(params, batch.observations, &actor_cache);
  const Eigen::MatrixXd value =
      net.critic().Forward(params, batch.observations, &critic_cache);
  const Eigen::VectorXd log_std = net.LogStd();
  const Eigen::ArrayXd inv_var = (-2.0 * log_std.array()).exp();

  const Eigen::ArrayXXd diff = (batch.actions - mean).array();
  const Eigen::ArrayXXd z2 = diff.square().colwise() * inv_var;
  const Eigen::ArrayXd log_prob =
      -0.5 * z2.colwise().sum().transpose() - log_std.sum() -
      act * half_log_2pi;
  const Eigen::ArrayXd log_ratio = log_prob - batch.old_log_probs.array();
  const Eigen::ArrayXd ratio = log_ratio.exp();
  const Eigen::ArrayXd adv = batch.advantages.array();
  const Eigen::ArrayXd surr1 = ratio * adv;
  const Eigen::ArrayXd surr2 =
      ratio.cwiseMax(1.0 - cfg.clip).cwiseMin(1.0 + cfg.clip) * adv;

  LossStats stats;
  stats.policy = -surr1.cwiseMin(surr2).mean();
  const Eigen::ArrayXd value_err =
      value.row(0).transpose().array() - batch.returns.array();
  stats.value = value_err.square().mean();
  stats.entropy = log_std.sum() + act * (0.5 + half_log_2pi);
  stats.total = stats.policy + cfg.value_coef * stats.value -
                cfg.entropy_coef * stats.entropy;
  stats.approx_kl = ((ratio - 1.0) - log_ratio).mean();
  stats.clip_fraction =
      ((ratio - 1.0).abs() > cfg.clip).cast<double>().mean();
  stats.mean_ratio = ratio.mean();

  if (grad == nullptr) return stats;
  grad->setZero(params.size());

  // dL/dlog_prob: only the unclipped branch of the min carries gradient.
  const Eigen::ArrayXd dlogp =
      (surr1 <= surr2).select(-ratio * adv / b, 0.0);

  const Eigen::MatrixXd grad_mean =
      ((diff.colwise() * inv_var).rowwise() * dlogp.transpose()).matrix();
  net.actor().Backward(params, actor_cache, grad_mean, *grad);

  const Eigen::ArrayXd dlog_std =
      ((z2 - 1.0).rowwise() * dlogp.transpose()).rowwise().sum() -
      cfg.entropy_coef;
  const Eigen::VectorXd raw =
      params.segment(net.log_std_offset(), act);
  for (int d = 0; d < act; ++d) {
    const bool active = raw[d] >= kMinLogStd && raw[d] <= kMaxLogStd;
    (*grad)[net.log_std_offset() + d] = active ? dlog_std[d] : 0.0;
  }

  const Eigen::MatrixXd grad_value =
      (2.0 * cfg.value_coef / b * value_err).matrix().transpose();
  net.critic().Backward(params, critic_cache, grad_value, *grad);
  return stats;
}

Adam::Adam(int num_params, double beta1, double beta2, double eps)
    : beta1_(beta1),
      beta2_(beta2),
      eps_(eps),
      m_(Eigen::VectorXd::Zero(num_params)),
      v_(Eigen::VectorXd::Zero(num_params)) {}

void Adam::Step(Eigen::VectorXd& params, const Eigen::VectorXd& grad,
                double lr) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -=
      lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

UpdateStats PpoUpdate(PolicyNet& net, Adam& adam, const RolloutBuffer& buffer,
                      const PpoConfig& cfg, std::mt19937_64& rng) {
  const int n = buffer.size();
  std::vector<int> order(n);
  UpdateStats stats;
  int updates = 0;
  Eigen::VectorXd grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (int m = 0; m < cfg.minibatches; ++m) {
      const int begin = static_cast<int>(int64_t{n} * m / cfg.minibatches);
      const int end = static_cast<int>(int64_t{n} * (m + 1) / cfg.minibatches);
      const Minibatch mb = GatherMinibatch(
          buffer, std::span<const int>(order.data() + begin, end - begin));
      const LossStats loss = PpoLoss(net, mb, cfg, &grad);
      if (!std::isfinite(loss.total) || !grad.allFinite()) {
        throw TrainingDivergedError(
            "non-finite PPO loss at epoch " + std::to_string(epoch) +
            ", minibatch " + std::to_string(m) +
            " (policy=" + std::to_string(loss.policy) +
            ", value=" + std::to_string(loss.value) + ")");
      }
      if (updates == 0) stats.first_ratio = loss.mean_ratio;
      const double norm = grad.norm();
      if (norm > cfg.max_grad_norm) grad *= cfg.max_grad_norm / norm;
      adam.Step(net.parameters(), grad, cfg.learning_rate);
      auto log_std =
          net.parameters().segment(net.log_std_offset(), net.shape().act_dim);
      log_std = log_std.cwiseMax(kMinLogStd).cwiseMin(kMaxLogStd);

      stats.policy_loss += loss.policy;
      stats.value_loss += loss.value;
      stats.entropy += loss.entropy;
      stats.approx_kl += loss.approx_kl;
      stats.clip_fraction += loss.clip_fraction;
      stats.grad_norm += norm;
      ++updates;
    }
  }
  stats.policy_loss /= updates;
  stats.value_loss /= updates;
  stats.entropy /= updates;
  stats.approx_kl /= updates;
  stats.clip_fraction /= updates;
  stats.grad_norm /= updates;
  return stats;
}

TrainResult Train(const PpoConfig& cfg, const EnvConfig& env_cfg,
                  uint64_t seed,
                  const std::function<void(const CurvePoint&)>& on_iteration) {
  cfg.Validate();
  env_cfg.Validate();
  const int n = cfg.num_envs;
  const int act = kNumThrusters;
  const PolicyShape shape{kObservationSize, act, cfg.hidden};

  TrainResult result{PolicyNet::Initialize(shape, seed, cfg.init_log_std),
                     {},
                     0};
  PolicyNet& net = result.net;
  EnvBatch envs(env_cfg, n, seed);

  std::vector<std::mt19937_64> action_rngs;
  action_rngs.reserve(n);
  for (int i = 0; i < n; ++i) {
    std::seed_seq seq{static_cast<uint32_t>(seed),
                      static_cast<uint32_t>(seed >> 32),
                      static_cast<uint32_t>(i), 0xac7u};
    action_rngs.emplace_back(seq);
  }
  std::seed_seq update_seq{static_cast<uint32_t>(seed),
                           static_cast<uint32_t>(seed >> 32), 0x5e11u};
  std::mt19937_64 update_rng(update_seq);

  Adam adam(net.num_parameters());
  RolloutBuffer buffer(cfg.steps_per_iteration, n, kObservationSize, act);
  Eigen::VectorXd episode_return = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd raw(act, n);
  ActionBatch clamped(act, n);
  Eigen::VectorXd log_probs(n);

  for (int it = 0; it < cfg.iterations; ++it) {
    buffer.Clear();
    std::vector<double> finished;
    double step_reward_sum = 0.0;
    for (int t = 0; t < cfg.steps_per_iteration; ++t) {
      const Eigen::MatrixXd obs = envs.observations();
      const PolicyNet::Output out = net.Forward(obs);
      for (int i = 0; i < n; ++i) {
        const SampledAction a = SampleAction(
            std::span<const double>(out.mean.col(i).data(), act),
            std::span<const double>(out.log_std.data(), act),
            action_rngs[i]);
        for (int d = 0; d < act; ++d) {
          raw(d, i) = a.raw[d];
          clamped(d, i) = a.clamped[d];
        }
        log_probs[i] = a.log_prob;
      }
      const BatchStep step = envs.Step(clamped);

      Eigen::VectorXd train_rewards = step.rewards;
      if (cfg.bootstrap_timeouts) {
        std::vector<int> timeouts;
        for (int i = 0; i < n; ++i) {
          if (step.dones[i] && !step.diverged[i]) timeouts.push_back(i);
        }
        if (!timeouts.empty()) {
          Eigen::MatrixXd terminal(kObservationSize, timeouts.size());
          for (size_t j = 0; j < timeouts.size(); ++j) {
            terminal.col(j) = step.terminal_observations.col(timeouts[j]);
          }
          const Eigen::RowVectorXd v = net.Forward(terminal).value;
          for (size_t j = 0; j < timeouts.size(); ++j) {
            train_rewards[timeouts[j]] += cfg.gamma * v[j];
          }
        }
      }
      buffer.Add(obs, raw, log_probs, train_rewards, out.value.transpose(),
                 step.dones);

      episode_return += step.rewards;
      step_reward_sum += step.rewards.sum();
      for (int i = 0; i < n; ++i) {
        if (step.dones[i]) {
          finished.push_back(episode_return[i]);
          episode_return[i] = 0.0;
        }
      }
    }

    const Eigen::VectorXd bootstrap =
        net.Forward(envs.observations()).value.transpose();
    ComputeGae(buffer, bootstrap, cfg.gamma, cfg.gae_lambda);
    NormalizeAdvantages(buffer.advantages);

    CurvePoint point;
    point.iteration = it;
    point.mean_step_reward =
        step_reward_sum / (static_cast<double>(n) * cfg.steps_per_iteration);
    if (finished.empty()) {
      point.mean_reward = point.mean_step_reward * envs.config().episode_steps();
    } else {
      const double count = static_cast<double>(finished.size());
      const double mean =
          std::accumulate(finished.begin(), finished.end(), 0.0) / count;
      double var = 0.0;
      for (double x : finished) var += (x - mean) * (x - mean);
      point.mean_reward = mean;
      point.std_reward = std::sqrt(var / count);
    }
    try {
      point.update = PpoUpdate(net, adam, buffer, cfg, update_rng);
    } catch (const TrainingDivergedError& e) {
      result.env_divergences = envs.divergence_count();
      throw TrainingAborted("iteration " + std::to_string(it) + ": " +
                                e.what(),
                            result);
    }
    result.curve.push_back(point);
    if (on_iteration) on_iteration(point);
  }
  result.env_divergences = envs.divergence_count();
  return result;
}

}  // namespace auvsim

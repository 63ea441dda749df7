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

#ifndef AUVSIM_PPO_H_
#define AUVSIM_PPO_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "auvsim/environment.h"
#include "auvsim/policy.h"

namespace auvsim {

struct PpoConfig {
  double learning_rate = 3e-4;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip = 0.2;
  int epochs = 5;
  int minibatches = 4;
  double value_coef = 0.5;
  double entropy_coef = 0.005;
  double max_grad_norm = 1.0;
  int iterations = 200;
  int num_envs = 256;
  int steps_per_iteration = 60;
  int hidden = 128;
  double init_log_std = 0.0;
  // Adds gamma * V(terminal observation) to the last reward of episodes that
  // end on the time limit rather than treating them as absorbing.
  bool bootstrap_timeouts = true;

  void Validate() const;
};

// Step-major storage: entry (t, env) lives at column t * num_envs + env.
class RolloutBuffer {
 public:
  RolloutBuffer(int steps, int num_envs, int obs_dim, int act_dim);

  int steps() const { return steps_; }
  int num_envs() const { return num_envs_; }
  int capacity() const { return steps_ * num_envs_; }
  int size() const { return filled_ * num_envs_; }
  bool full() const { return filled_ == steps_; }

  // Appends one time step for all envs.
  void Add(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& actions,
           const Eigen::VectorXd& log_probs, const Eigen::VectorXd& rewards,
           const Eigen::VectorXd& values, const std::vector<uint8_t>& dones);
  void Clear() { filled_ = 0; }

  Eigen::MatrixXd observations;
  Eigen::MatrixXd actions;  // raw (unclamped) samples
  Eigen::VectorXd log_probs;
  Eigen::VectorXd rewards;
  Eigen::VectorXd values;
  Eigen::VectorXd dones;
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;

 private:
  int steps_;
  int num_envs_;
  int filled_ = 0;
};

// delta_t = r_t + gamma * V_{t+1} * (1 - done_t) - V_t,
// A_t = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}, returns = A + V.
// `bootstrap` holds V of the observation following the last stored step.
void ComputeGae(RolloutBuffer& buffer, const Eigen::VectorXd& bootstrap,
                double gamma, double lambda);

// In-place zero-mean, unit-variance normalization.
void NormalizeAdvantages(Eigen::VectorXd& advantages);

struct Minibatch {
  Eigen::MatrixXd observations;
  Eigen::MatrixXd actions;
  Eigen::VectorXd old_log_probs;
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

Minibatch GatherMinibatch(const RolloutBuffer& buffer,
                          std::span<const int> indices);

struct LossStats {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double mean_ratio = 0.0;
};

// Clipped surrogate + value_coef * MSE - entropy_coef * entropy. Writes the
// gradient with respect to all parameters into `grad` when non-null.
LossStats PpoLoss(const PolicyNet& net, const Minibatch& batch,
                  const PpoConfig& cfg, Eigen::VectorXd* grad);

class Adam {
 public:
  explicit Adam(int num_params, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);
  void Step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr);

 private:
  double beta1_, beta2_, eps_;
  int64_t t_ = 0;
  Eigen::VectorXd m_, v_;
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double first_ratio = 0.0;  // mean ratio of the first minibatch
  double grad_norm = 0.0;    // mean pre-clip norm
};

// Several epochs of shuffled minibatch updates. Advantages in the buffer must
// already be normalized. Throws TrainingDivergedError on a non-finite loss or
// gradient; the parameters are left at their last finite values.
UpdateStats PpoUpdate(PolicyNet& net, Adam& adam, const RolloutBuffer& buffer,
                      const PpoConfig& cfg, std::mt19937_64& rng);

struct CurvePoint {
  int iteration = 0;
  double mean_reward = 0.0;  // mean return of episodes finished this iteration
  double std_reward = 0.0;
  double mean_step_reward = 0.0;
  UpdateStats update;
};

struct TrainResult {
  PolicyNet net;
  std::vector<CurvePoint> curve;
  int64_t env_divergences = 0;
};

// Raised when training hits non-finite values; carries the last parameters
// that produced a finite update.
class TrainingAborted : public TrainingDivergedError {
 public:
  TrainingAborted(const std::string& what, TrainResult partial)
      : TrainingDivergedError(what), partial_(std::move(partial)) {}
  const TrainResult& partial() const { return partial_; }

 private:
  TrainResult partial_;
};

// Collect, estimate advantages, update; repeated cfg.iterations times.
// Deterministic for a fixed seed regardless of env.workers.
TrainResult Train(const PpoConfig& cfg, const EnvConfig& env, uint64_t seed,
                  const std::function<void(const CurvePoint&)>& on_iteration =
                      nullptr);

}  // namespace auvsim

#endif  // AUVSIM_PPO_H_

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

#include "auvsim/environment.h"

#include <algorithm>
#include <cmath>

#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

namespace auvsim {

void RewardWeights::Validate() const {
  for (const auto& [name, value] :
       {std::pair{"position", position}, std::pair{"orientation", orientation},
        std::pair{"effort", effort}}) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
      throw ParameterError(std::string("env.reward_weights.") + name,
                           "must be a finite non-negative number");
    }
  }
  if (Sum() <= 0.0) {
    throw ParameterError("env.reward_weights", "must not all be zero");
  }
}

DomainRandomization DomainRandomization::Preset(std::string_view name) {
  if (name == "none") return {0.0, 0.0};
  if (name == "small") return {0.25, 1.5e-3};
  if (name == "large") return {0.5, 3.0e-3};
  throw ParameterError("env.domain_randomization.preset",
                       "unknown preset '" + std::string(name) +
                           "' (expected none, small, large or custom)");
}

void DomainRandomization::Validate() const {
  if (!(cob_noise_radius >= 0.0) || !std::isfinite(cob_noise_radius)) {
    throw ParameterError("env.domain_randomization.cob_noise_radius",
                         "must be non-negative");
  }
  if (!(volume_noise_range >= 0.0) || !std::isfinite(volume_noise_range)) {
    throw ParameterError("env.domain_randomization.volume_noise_range",
                         "must be non-negative");
  }
}

int EnvConfig::episode_steps() const {
  return static_cast<int>(
      std::ceil(episode_seconds / control_period() - 1e-9));
}

void EnvConfig::Validate() const {
  vehicle.Validate();
  if (!(physics_dt > 0.0) || !std::isfinite(physics_dt)) {
    throw ParameterError("env.physics_dt", "must be positive");
  }
  if (decimation < 1) {
    throw ParameterError("env.decimation", "must be at least 1");
  }
  if (!(episode_seconds > 0.0) || !std::isfinite(episode_seconds)) {
    throw ParameterError("env.episode_seconds", "must be positive");
  }
  if (!(max_offset > 0.0) || !std::isfinite(max_offset)) {
    throw ParameterError("env.max_offset", "must be positive");
  }
  if (workers < 1) {
    throw ParameterError("env.workers", "must be at least 1");
  }
  reward.Validate();
  randomization.Validate();
}

std::array<double, kObservationSize> Observation::Flatten() const {
  return {offset.x(),           offset.y(),           offset.z(),
          goal_orientation.w(), goal_orientation.x(), goal_orientation.y(),
          goal_orientation.z(), orientation.w(),      orientation.x(),
          orientation.y(),      orientation.z(),      lin_vel.x(),
          lin_vel.y(),          lin_vel.z(),          ang_vel.x(),
          ang_vel.y(),          ang_vel.z()};
}

Observation Observation::Unflatten(
    std::span<const double, kObservationSize> f) {
  Observation obs;
  obs.offset = Vec3(f[0], f[1], f[2]);
  obs.goal_orientation = UnitQuat(f[3], f[4], f[5], f[6]);
  obs.orientation = UnitQuat(f[7], f[8], f[9], f[10]);
  obs.lin_vel = Vec3(f[11], f[12], f[13]);
  obs.ang_vel = Vec3(f[14], f[15], f[16]);
  return obs;
}

Vec3 BodyFrameOffset(const RigidBodyState& state, const Vec3& goal_position) {
  return state.orientation.InverseRotate(goal_position - state.position);
}

Observation MakeObservation(const RigidBodyState& state, const Pose& goal,
                            double max_offset) {
  Observation obs;
  obs.offset = BodyFrameOffset(state, goal.position);
  const double n = obs.offset.norm();
  if (n > max_offset) obs.offset *= max_offset / n;
  obs.goal_orientation = goal.orientation.Canonical();
  obs.orientation = state.orientation.Canonical();
  obs.lin_vel = state.lin_vel;
  obs.ang_vel = state.ang_vel;
  return obs;
}

double ComputeReward(const Observation& obs,
                     std::span<const double, kNumThrusters> action,
                     const RewardWeights& weights) {
  double effort = 0.0;
  for (double a : action) effort += a * a;
  const double angle = QuatAngleBetween(obs.goal_orientation, obs.orientation);
  return weights.position * std::exp(-obs.offset.squaredNorm()) +
         weights.orientation * std::exp(-angle) +
         weights.effort * std::exp(-effort);
}

Vec3 SampleUniformBall(double radius, std::mt19937_64& rng) {
  if (radius == 0.0) return Vec3::Zero();
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;
  Vec3 dir;
  double n;
  do {
    dir = Vec3(normal(rng), normal(rng), normal(rng));
    n = dir.norm();
  } while (n == 0.0);
  return radius * std::cbrt(uniform(rng)) * dir / n;
}

UnitQuat SampleUniformRotation(std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  while (true) {
    const double w = normal(rng);
    const double x = normal(rng);
    const double y = normal(rng);
    const double z = normal(rng);
    if (w * w + x * x + y * y + z * z > 1e-12) return UnitQuat(w, x, y, z);
  }
}

VehicleParams SampleDomain(const DomainRandomization& dr,
                           const VehicleParams& base, std::mt19937_64& rng) {
  VehicleParams out = base;
  if (dr.cob_noise_radius > 0.0) {
    out.cob_offset = base.cob_offset + SampleUniformBall(dr.cob_noise_radius, rng);
  }
  if (dr.volume_noise_range > 0.0) {
    std::uniform_real_distribution<double> noise(-0.5 * dr.volume_noise_range,
                                                 0.5 * dr.volume_noise_range);
    do {
      out.volume = base.volume + noise(rng);
    } while (out.volume < 0.0);
  }
  return out;
}

std::mt19937_64 EpisodeRng(uint64_t seed, uint64_t env_id, uint64_t episode) {
  std::seed_seq seq{static_cast<uint32_t>(seed),
                    static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(env_id),
                    static_cast<uint32_t>(env_id >> 32),
                    static_cast<uint32_t>(episode),
                    static_cast<uint32_t>(episode >> 32)};
  return std::mt19937_64(seq);
}

VehicleEnv::VehicleEnv(const EnvConfig& cfg, const VehicleParams& params,
                       const RigidBodyState& state, const Pose& goal)
    : physics_dt_(cfg.physics_dt),
      decimation_(cfg.decimation),
      max_offset_(cfg.max_offset),
      weights_(cfg.reward),
      model_(params),
      state_(state),
      goal_(goal) {}

VehicleEnv::StepOutcome VehicleEnv::Step(
    std::span<const double, kNumThrusters> action) {
  Action clamped;
  for (int i = 0; i < kNumThrusters; ++i) {
    // NaN actions are treated as neutral.
    clamped[i] = std::isnan(action[i]) ? 0.0 : std::clamp(action[i], -1.0, 1.0);
  }
  const Wrench thrust = ActionToWrench(clamped, model_.params().thrusters);

  StepOutcome out;
  try {
    for (int k = 0; k < decimation_; ++k) {
      state_ = IntegrateStep(state_, model_.Compute(state_) + thrust,
                             model_.mass_properties(), physics_dt_);
    }
  } catch (const DivergenceError&) {
    out.diverged = true;
  }
  ++step_count_;
  out.reward = ComputeReward(Observe(), clamped, weights_);
  return out;
}

Observation VehicleEnv::Observe() const {
  return MakeObservation(state_, goal_, max_offset_);
}

EnvBatch::EnvBatch(const EnvConfig& cfg, int num_envs, uint64_t seed,
                   uint64_t first_env_id)
    : cfg_(cfg),
      seed_(seed),
      first_env_id_(first_env_id),
      episode_steps_(cfg.episode_steps()),
      episodes_(num_envs, 0),
      observations_(kObservationSize, num_envs) {
  cfg_.Validate();
  if (num_envs < 1) {
    throw ParameterError("ppo.num_envs", "must be at least 1");
  }
  envs_.reserve(num_envs);
  for (int i = 0; i < num_envs; ++i) {
    envs_.emplace_back(cfg_, cfg_.vehicle, RigidBodyState{}, Pose{});
    ResetInto(i);
  }
}

void EnvBatch::ResetInto(int i) {
  std::mt19937_64 rng = EpisodeRng(seed_, first_env_id_ + i, episodes_[i]);
  const VehicleParams params =
      SampleDomain(cfg_.randomization, cfg_.vehicle, rng);
  RigidBodyState state;
  state.orientation = SampleUniformRotation(rng);
  state.position = SampleUniformBall(cfg_.max_offset, rng);
  Pose goal;
  goal.orientation = SampleUniformRotation(rng);
  envs_[i] = VehicleEnv(cfg_, params, state, goal);
  observations_.col(i) =
      Eigen::Map<const Eigen::Matrix<double, kObservationSize, 1>>(
          envs_[i].Observe().Flatten().data());
}

Observation EnvBatch::Reset(int i) {
  ++episodes_[i];
  ResetInto(i);
  return envs_[i].Observe();
}

void EnvBatch::Place(int i, const VehicleParams& params,
                     const RigidBodyState& state, const Pose& goal) {
  envs_[i] = VehicleEnv(cfg_, params, state, goal);
  const auto flat = envs_[i].Observe().Flatten();
  observations_.col(i) =
      Eigen::Map<const Eigen::Matrix<double, kObservationSize, 1>>(
          flat.data());
}

void EnvBatch::ParallelFor(int n,
                           const std::function<void(int, int)>& body) const {
  if (cfg_.workers <= 1 || n <= 1) {
    body(0, n);
    return;
  }
  tbb::task_arena arena(cfg_.workers);
  arena.execute([&] {
    const int grain = std::max(1, n / (4 * cfg_.workers));
    tbb::parallel_for(tbb::blocked_range<int>(0, n, grain),
                      [&](const tbb::blocked_range<int>& r) {
                        body(r.begin(), r.end());
                      });
  });
}

BatchStep EnvBatch::Step(const ActionBatch& actions) {
  const int n = size();
  if (actions.cols() != n) {
    throw std::invalid_argument("expected one action per environment");
  }
  BatchStep out;
  out.observations.resize(kObservationSize, n);
  out.terminal_observations.resize(kObservationSize, n);
  out.rewards.resize(n);
  out.dones.assign(n, 0);
  out.diverged.assign(n, 0);
  std::vector<int> steps(n, 0);

  ParallelFor(n, [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      Action a;
      Eigen::Map<Eigen::Matrix<double, kNumThrusters, 1>>(a.data()) =
          actions.col(i);
      const VehicleEnv::StepOutcome step = envs_[i].Step(a);
      const auto flat = envs_[i].Observe().Flatten();
      out.terminal_observations.col(i) =
          Eigen::Map<const Eigen::Matrix<double, kObservationSize, 1>>(
              flat.data());
      out.rewards[i] = step.reward;
      out.diverged[i] = step.diverged;
      steps[i] = envs_[i].step_count();
      out.dones[i] =
          step.diverged || envs_[i].step_count() >= episode_steps_;
      if (out.dones[i]) {
        ++episodes_[i];
        ResetInto(i);
      } else {
        observations_.col(i) = out.terminal_observations.col(i);
      }
    }
  });
  out.observations = observations_;

  for (int i = 0; i < n; ++i) {
    if (out.diverged[i]) {
      ++divergence_count_;
      if (incident_hook_) {
        incident_hook_({i, episodes_[i] - 1, steps[i]});
      }
    }
  }
  if (step_hook_) {
    for (int i = 0; i < n; ++i) {
      StepRecord rec;
      rec.env = i;
      rec.observation = Observation::Unflatten(
          std::span<const double, kObservationSize>(
              out.terminal_observations.col(i).data(), kObservationSize));
      for (int k = 0; k < kNumThrusters; ++k) {
        rec.action[k] = std::clamp(actions(k, i), -1.0, 1.0);
      }
      rec.reward = out.rewards[i];
      rec.done = out.dones[i];
      rec.step = steps[i];
      step_hook_(rec);
    }
  }
  return out;
}

}  // namespace auvsim

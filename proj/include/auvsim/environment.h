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

#ifndef AUVSIM_ENVIRONMENT_H_
#define AUVSIM_ENVIRONMENT_H_

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "auvsim/hydrodynamics.h"
#include "auvsim/rigid_body.h"
#include "auvsim/thrusters.h"

namespace auvsim {

inline constexpr int kObservationSize = 17;

using ObservationBatch = Eigen::Matrix<double, kObservationSize, Eigen::Dynamic>;
using ActionBatch = Eigen::Matrix<double, kNumThrusters, Eigen::Dynamic>;

struct RewardWeights {
  double position = 1.0;
  double orientation = 0.5;
  double effort = 0.1;

  double Sum() const { return position + orientation + effort; }
  void Validate() const;
};

// Per-episode perturbation of the center of buoyancy (uniform in a ball) and
// the displaced volume (uniform, centered on the nominal value).
struct DomainRandomization {
  double cob_noise_radius = 0.0;    // m
  double volume_noise_range = 0.0;  // m^3, full width

  // "none", "small" or "large". Throws ParameterError otherwise.
  static DomainRandomization Preset(std::string_view name);
  void Validate() const;
};

struct EnvConfig {
  VehicleParams vehicle;
  double physics_dt = 0.0125;   // s
  int decimation = 4;           // physics substeps per action
  double episode_seconds = 3.0;
  double max_offset = 2.0;      // m; spawn radius and observation clip
  RewardWeights reward;
  DomainRandomization randomization;
  int workers = 1;

  double control_period() const { return physics_dt * decimation; }
  // ceil(episode_seconds / control_period), robust to rounding.
  int episode_steps() const;
  void Validate() const;
};

struct Pose {
  Vec3 position = Vec3::Zero();
  UnitQuat orientation;
};

// Policy input. Flattened as offset(3), goal_orientation(4, wxyz),
// orientation(4, wxyz), lin_vel(3), ang_vel(3). Quaternions are stored with
// a non-negative scalar part.
struct Observation {
  Vec3 offset = Vec3::Zero();  // goal - position, body frame, clipped
  UnitQuat goal_orientation;
  UnitQuat orientation;
  Vec3 lin_vel = Vec3::Zero();
  Vec3 ang_vel = Vec3::Zero();

  std::array<double, kObservationSize> Flatten() const;
  static Observation Unflatten(std::span<const double, kObservationSize> flat);
};

// Goal minus position, rotated into the body frame. Not clipped.
Vec3 BodyFrameOffset(const RigidBodyState& state, const Vec3& goal_position);

Observation MakeObservation(const RigidBodyState& state, const Pose& goal,
                            double max_offset);

// position * exp(-|offset|^2) + orientation * exp(-angle) +
// effort * exp(-|a|^2).
double ComputeReward(const Observation& obs,
                     std::span<const double, kNumThrusters> action,
                     const RewardWeights& weights);

Vec3 SampleUniformBall(double radius, std::mt19937_64& rng);
UnitQuat SampleUniformRotation(std::mt19937_64& rng);

VehicleParams SampleDomain(const DomainRandomization& dr,
                           const VehicleParams& base, std::mt19937_64& rng);

// Independent stream for (seed, env, episode); order of use across envs
// cannot affect any one env's samples.
std::mt19937_64 EpisodeRng(uint64_t seed, uint64_t env_id, uint64_t episode);

// A single vehicle with its own parameters, goal and episode clock.
class VehicleEnv {
 public:
  VehicleEnv(const EnvConfig& cfg, const VehicleParams& params,
             const RigidBodyState& state, const Pose& goal);

  struct StepOutcome {
    double reward = 0.0;
    bool diverged = false;
  };

  // Holds the clamped action for `decimation` physics substeps.
  StepOutcome Step(std::span<const double, kNumThrusters> action);

  Observation Observe() const;

  const RigidBodyState& state() const { return state_; }
  const Pose& goal() const { return goal_; }
  const VehicleParams& params() const { return model_.params(); }
  int step_count() const { return step_count_; }

 private:
  double physics_dt_;
  int decimation_;
  double max_offset_;
  RewardWeights weights_;
  HydroModel model_;
  RigidBodyState state_;
  Pose goal_;
  int step_count_ = 0;
};

struct StepRecord {
  int env = 0;
  int step = 0;  // control steps taken in the episode, after this step
  Observation observation;
  Action action{};
  double reward = 0.0;
  bool done = false;
};

struct Incident {
  int env = 0;
  uint64_t episode = 0;
  int step = 0;
};

struct BatchStep {
  ObservationBatch observations;  // post-reset for finished envs
  ObservationBatch terminal_observations;  // pre-reset
  Eigen::VectorXd rewards;
  std::vector<uint8_t> dones;
  std::vector<uint8_t> diverged;
};

// N independent vehicles regulating toward their goal poses. Env i draws all
// of its randomness from EpisodeRng(seed, first_env_id + i, episode).
class EnvBatch {
 public:
  EnvBatch(const EnvConfig& cfg, int num_envs, uint64_t seed,
           uint64_t first_env_id = 0);

  int size() const { return static_cast<int>(envs_.size()); }
  const EnvConfig& config() const { return cfg_; }
  const ObservationBatch& observations() const { return observations_; }
  const VehicleEnv& env(int i) const { return envs_[i]; }
  uint64_t episode(int i) const { return episodes_[i]; }
  int64_t divergence_count() const { return divergence_count_; }

  // Starts a new episode for env i and returns its first observation.
  Observation Reset(int i);

  // Replaces env i with a fixed initial state and goal (no randomization).
  void Place(int i, const VehicleParams& params, const RigidBodyState& state,
             const Pose& goal);

  // One control step for every env; finished envs are reset automatically.
  BatchStep Step(const ActionBatch& actions);

  void set_workers(int workers) { cfg_.workers = workers; }
  void set_step_hook(std::function<void(const StepRecord&)> hook) {
    step_hook_ = std::move(hook);
  }
  void set_incident_hook(std::function<void(const Incident&)> hook) {
    incident_hook_ = std::move(hook);
  }

 private:
  void ResetInto(int i);
  void ParallelFor(int n, const std::function<void(int, int)>& body) const;

  EnvConfig cfg_;
  uint64_t seed_;
  uint64_t first_env_id_;
  int episode_steps_;
  std::vector<VehicleEnv> envs_;
  std::vector<uint64_t> episodes_;
  ObservationBatch observations_;
  int64_t divergence_count_ = 0;
  std::function<void(const StepRecord&)> step_hook_;
  std::function<void(const Incident&)> incident_hook_;
};

}  // namespace auvsim

#endif  // AUVSIM_ENVIRONMENT_H_

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

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include "doctest.h"
#include "test_util.h"

namespace auvsim {
namespace {

using testing::OracleMatrix;
using testing::RandomQuat;
using testing::RandomVec;
using testing::Uniform;

constexpr double kPi = std::numbers::pi;

VehicleParams ExactlyNeutral() {
  VehicleParams p;
  p.water_density = 1024.0;
  p.volume = 0.03125;
  p.mass = 32.0;
  p.cob_offset = Vec3::Zero();
  return p;
}

ActionBatch RandomActions(int n, std::mt19937_64& rng) {
  ActionBatch a(kNumThrusters, n);
  for (int i = 0; i < a.size(); ++i) a.data()[i] = Uniform(rng, -1.2, 1.2);
  return a;
}

bool BitwiseEqual(const RigidBodyState& a, const RigidBodyState& b) {
  auto same = [](const auto& x, const auto& y) {
    return std::memcmp(x.data(), y.data(), sizeof(double) * x.size()) == 0;
  };
  return same(a.position, b.position) &&
         same(a.orientation.eigen().coeffs(), b.orientation.eigen().coeffs()) &&
         same(a.lin_vel, b.lin_vel) && same(a.ang_vel, b.ang_vel);
}

TEST_SUITE("environment") {

TEST_CASE("domain randomization presets") {
  CHECK(DomainRandomization::Preset("none").cob_noise_radius == 0.0);
  CHECK(DomainRandomization::Preset("none").volume_noise_range == 0.0);
  CHECK(DomainRandomization::Preset("small").cob_noise_radius == 0.25);
  CHECK(DomainRandomization::Preset("small").volume_noise_range == 1.5e-3);
  CHECK(DomainRandomization::Preset("large").cob_noise_radius == 0.5);
  CHECK(DomainRandomization::Preset("large").volume_noise_range == 3e-3);
  CHECK_THROWS_AS(DomainRandomization::Preset("huge"), ParameterError);
}

TEST_CASE("domain sampler") {
  const VehicleParams base;
  std::mt19937_64 rng(1);
  const VehicleParams same = SampleDomain({0.0, 0.0}, base, rng);
  CHECK(same.cob_offset == base.cob_offset);
  CHECK(same.volume == base.volume);
  CHECK(same.mass == base.mass);

  const int n = 100000;
  Vec3 sum = Vec3::Zero();
  double max_norm = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec3 noise = SampleDomain({0.25, 0.0}, base, rng).cob_offset -
                       base.cob_offset;
    max_norm = std::max(max_norm, noise.norm());
    sum += noise;
  }
  CHECK(max_norm <= 0.25 + 1e-15);
  // Per-axis variance of a uniform ball is R^2 / 5.
  const double sigma = std::sqrt(0.25 * 0.25 / 5.0 / n);
  for (int k = 0; k < 3; ++k) CHECK(std::abs(sum[k] / n) < 3 * sigma);

  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = SampleDomain({0.0, 3e-3}, base, rng).volume;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo >= base.volume - 1.5e-3);
  CHECK(hi <= base.volume + 1.5e-3);
  CHECK(hi - lo > 2.9e-3);
}

TEST_CASE("uniform ball fills the volume") {
  std::mt19937_64 rng(2);
  const int n = 100000;
  int inner = 0;
  for (int i = 0; i < n; ++i) {
    if (SampleUniformBall(2.0, rng).norm() < 1.0) ++inner;
  }
  // P(|x| < R/2) = 1/8.
  const double p = 0.125;
  CHECK(std::abs(static_cast<double>(inner) / n - p) <
        4 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("sampled orientations are uniform on SO(3)") {
  // Oracle: the Haar measure has E[R] = 0 and P(angle < pi/2) =
  // (pi/2 - 1) / pi from the density (1 - cos t) / pi.
  std::mt19937_64 rng(3);
  const int n = 100000;
  Mat3 mean = Mat3::Zero();
  int small = 0;
  for (int i = 0; i < n; ++i) {
    const UnitQuat q = SampleUniformRotation(rng);
    mean += OracleMatrix(q);
    if (QuatAngleBetween(q, UnitQuat::Identity()) < kPi / 2) ++small;
  }
  mean /= n;
  // Each entry has variance 1/3.
  CHECK(mean.cwiseAbs().maxCoeff() < 4 * std::sqrt(1.0 / 3.0 / n));
  CHECK(std::abs(mean.trace()) < 4 * std::sqrt(1.0 / n));
  const double p = (kPi / 2 - 1) / kPi;
  CHECK(std::abs(static_cast<double>(small) / n - p) <
        4 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("reset contract") {
  EnvConfig cfg;
  EnvBatch batch(cfg, 64, 5);
  for (int round = 0; round < 50; ++round) {
    for (int i = 0; i < batch.size(); ++i) {
      const Observation obs = batch.Reset(i);
      const RigidBodyState& s = batch.env(i).state();
      CHECK(BodyFrameOffset(s, batch.env(i).goal().position).norm() <= 2.0);
      CHECK(obs.offset.norm() <= 2.0);
      CHECK(s.lin_vel == Vec3::Zero());
      CHECK(s.ang_vel == Vec3::Zero());
      CHECK(batch.env(i).goal().position == Vec3::Zero());
    }
  }
}

TEST_CASE("reward") {
  RewardWeights w;
  Observation obs;
  const Action zero{};
  CHECK(ComputeReward(obs, zero, w) == w.position + w.orientation + w.effort);

  const RewardWeights unit{1.0, 1.0, 1.0};
  obs.offset = Vec3(0.6, 0.0, 0.8);
  CHECK(std::abs(ComputeReward(obs, zero, unit) - (std::exp(-1.0) + 2.0)) <
        1e-15);
  CHECK(std::abs(ComputeReward(obs, zero, unit) - 2.3679) < 1e-4);

  obs.offset = Vec3::Zero();
  obs.orientation = UnitQuat::FromAxisAngle(Vec3(1, 1, 0), kPi / 3);
  CHECK(std::abs(ComputeReward(obs, zero, unit) -
                 (2.0 + std::exp(-kPi / 3))) < 1e-12);
  CHECK(std::abs(ComputeReward(obs, zero, unit) - 2.3509) < 1e-4);

  const Action a{0.5, -0.5, 0, 0, 0, 0};
  obs.orientation = UnitQuat::Identity();
  CHECK(std::abs(ComputeReward(obs, a, unit) - (2.0 + std::exp(-0.5))) <
        1e-15);
}

TEST_CASE("observation layout and round trip") {
  std::mt19937_64 rng(4);
  Observation obs;
  obs.offset = Vec3(1, 2, 3);
  obs.goal_orientation = UnitQuat(0.5, 0.5, 0.5, 0.5);
  obs.orientation = UnitQuat(0.0, 0.6, 0.0, 0.8);
  obs.lin_vel = Vec3(4, 5, 6);
  obs.ang_vel = Vec3(7, 8, 9);
  const auto flat = obs.Flatten();
  const std::array<double, 17> want{1,   2,   3,   0.5, 0.5, 0.5, 0.5, 0.0, 0.6,
                                    0.0, 0.8, 4,   5,   6,   7,   8,   9};
  CHECK(flat == want);
  for (int i = 0; i < 100; ++i) {
    Observation o;
    o.offset = RandomVec(rng, 2.0);
    o.goal_orientation = RandomQuat(rng).Canonical();
    o.orientation = RandomQuat(rng).Canonical();
    o.lin_vel = RandomVec(rng, 1.0);
    o.ang_vel = RandomVec(rng, 1.0);
    const auto f = o.Flatten();
    const auto g = Observation::Unflatten(f).Flatten();
    double worst = 0.0;
    for (int k = 0; k < 17; ++k) worst = std::max(worst, std::abs(g[k] - f[k]));
    CHECK(worst < 1e-15);
  }
}

TEST_CASE("observation clip and frame") {
  RigidBodyState s;
  s.position = Vec3(5, 0, 0);
  s.orientation = UnitQuat::FromAxisAngle(Vec3::UnitZ(), kPi / 2);
  const Pose goal;
  // World offset (-5, 0, 0) seen from a body yawed 90 deg is (0, 5, 0).
  CHECK((BodyFrameOffset(s, goal.position) - Vec3(0, 5, 0)).norm() < 1e-12);
  const Observation obs = MakeObservation(s, goal, 2.0);
  CHECK((obs.offset - Vec3(0, 2, 0)).norm() < 1e-12);

  s.orientation = -s.orientation;
  CHECK(MakeObservation(s, goal, 2.0).orientation.w() >= 0.0);
}

TEST_CASE("equilibrium holds exactly") {
  EnvConfig cfg;
  RigidBodyState s;
  s.position = Vec3(0.3, -0.2, 1.0);
  s.orientation = UnitQuat::FromAxisAngle(Vec3(1, 2, 3), 0.4);
  const Pose goal{s.position, s.orientation};
  VehicleEnv env(cfg, ExactlyNeutral(), s, goal);
  const Action zero{};
  for (int k = 0; k < 100; ++k) {
    const VehicleEnv::StepOutcome out = env.Step(zero);
    CHECK(out.reward == cfg.reward.Sum());
    CHECK(env.state() == s);
  }
}

TEST_CASE("forward thrust closes a forward offset") {
  EnvConfig cfg;
  Pose goal;
  goal.position = Vec3(1.5, 0, 0);
  VehicleEnv env(cfg, VehicleParams{}, RigidBodyState{}, goal);
  const Action forward{0.5, 0.5, 0, 0, 0, 0};
  double prev = env.Observe().offset.x();
  const int steps = static_cast<int>(std::round(1.0 / cfg.control_period()));
  for (int k = 0; k < steps; ++k) {
    env.Step(forward);
    const double x = env.Observe().offset.x();
    CHECK(x < prev);
    prev = x;
  }
}

TEST_CASE("identical envs produce identical outputs") {
  EnvConfig cfg;
  EnvBatch batch(cfg, 2, 9);
  RigidBodyState s;
  s.orientation = UnitQuat::FromAxisAngle(Vec3::UnitY(), 0.3);
  s.position = Vec3(0.5, 0.2, -0.1);
  const Pose goal;
  batch.Place(0, cfg.vehicle, s, goal);
  batch.Place(1, cfg.vehicle, s, goal);
  std::mt19937_64 rng(1);
  for (int k = 0; k < 40; ++k) {
    ActionBatch a(kNumThrusters, 2);
    a.col(0) = RandomActions(1, rng);
    a.col(1) = a.col(0);
    const BatchStep out = batch.Step(a);
    CHECK(out.observations.col(0) == out.observations.col(1));
    CHECK(out.rewards[0] == out.rewards[1]);
  }
}

TEST_CASE("stepping one env never touches another") {
  EnvConfig cfg;
  cfg.randomization = DomainRandomization::Preset("large");
  EnvBatch a(cfg, 16, 21), b(cfg, 16, 21);
  std::mt19937_64 rng(6);
  for (int k = 0; k < 150; ++k) {
    const ActionBatch act = RandomActions(16, rng);
    ActionBatch other = act;
    other.col(5) = -act.col(5);
    a.Step(act);
    b.Step(other);
    for (int j = 0; j < 16; ++j) {
      if (j == 5) continue;
      CHECK(BitwiseEqual(a.env(j).state(), b.env(j).state()));
    }
  }
}

TEST_CASE("batched and serial stepping agree bitwise") {
  EnvConfig cfg;
  cfg.randomization = DomainRandomization::Preset("small");
  for (int n : {1, 8, 33}) {
    EnvBatch batch(cfg, n, 77);
    batch.set_workers(4);
    std::vector<EnvBatch> singles;
    for (int i = 0; i < n; ++i) singles.emplace_back(cfg, 1, 77, i);
    std::mt19937_64 rng(n);
    for (int k = 0; k < 130; ++k) {
      const ActionBatch act = RandomActions(n, rng);
      const BatchStep out = batch.Step(act);
      for (int i = 0; i < n; ++i) {
        const BatchStep one = singles[i].Step(act.col(i));
        CHECK(std::memcmp(out.observations.col(i).data(),
                          one.observations.data(),
                          sizeof(double) * kObservationSize) == 0);
        CHECK(out.rewards[i] == one.rewards[0]);
        CHECK(out.dones[i] == one.dones[0]);
      }
    }
  }
}

TEST_CASE("episodes have a fixed length and bounded rewards") {
  EnvConfig cfg;
  cfg.randomization = DomainRandomization::Preset("large");
  CHECK(cfg.episode_steps() == 60);
  EnvBatch batch(cfg, 12, 31);
  std::vector<int> length(12, 0);
  std::vector<int> seen;
  double lo = 1e9, hi = -1e9;
  batch.set_step_hook([&](const StepRecord& r) {
    ++length[r.env];
    CHECK(r.step == length[r.env]);
    if (r.done) {
      seen.push_back(length[r.env]);
      length[r.env] = 0;
    }
  });
  std::mt19937_64 rng(8);
  for (int k = 0; k < 250; ++k) {
    const BatchStep out = batch.Step(RandomActions(12, rng));
    lo = std::min(lo, out.rewards.minCoeff());
    hi = std::max(hi, out.rewards.maxCoeff());
  }
  CHECK(seen.size() == 12 * 4);
  for (int len : seen) CHECK(len == 60);
  CHECK(lo > 0.0);
  CHECK(hi <= cfg.reward.Sum());
  CHECK(batch.episode(0) == 4);
}

TEST_CASE("episode step count tolerates rounding") {
  EnvConfig cfg;
  cfg.physics_dt = 0.01;
  cfg.decimation = 5;
  cfg.episode_seconds = 3.0;
  CHECK(cfg.episode_steps() == 60);
  cfg.episode_seconds = 3.01;
  CHECK(cfg.episode_steps() == 61);
}

TEST_CASE("divergence resets the env and reports an incident") {
  EnvConfig cfg;
  EnvBatch batch(cfg, 3, 1);
  VehicleParams tiny = cfg.vehicle;
  tiny.mass = 1e-300;
  tiny.inertia = 1e-300 * Mat3::Identity();
  RigidBodyState s;
  s.lin_vel = Vec3(1e200, 0, 0);
  batch.Place(1, tiny, s, Pose{});
  std::vector<Incident> incidents;
  batch.set_incident_hook([&](const Incident& i) { incidents.push_back(i); });
  const BatchStep out = batch.Step(ActionBatch::Zero(kNumThrusters, 3));
  CHECK(out.diverged[1] == 1);
  CHECK(out.dones[1] == 1);
  CHECK(out.diverged[0] == 0);
  REQUIRE(incidents.size() == 1);
  CHECK(incidents[0].env == 1);
  CHECK(batch.divergence_count() == 1);
  CHECK(out.observations.allFinite());
}

TEST_CASE("non-finite actions are treated as zero") {
  EnvConfig cfg;
  VehicleEnv a(cfg, ExactlyNeutral(), RigidBodyState{}, Pose{});
  const Action nan{NAN, NAN, NAN, NAN, NAN, NAN};
  a.Step(nan);
  CHECK(a.state() == RigidBodyState{});
}

TEST_CASE("config validation") {
  EnvConfig cfg;
  CHECK_NOTHROW(cfg.Validate());
  cfg.decimation = 0;
  CHECK_THROWS_AS(cfg.Validate(), ParameterError);
  cfg = EnvConfig{};
  cfg.reward.position = -1;
  CHECK_THROWS_AS(cfg.Validate(), ParameterError);
  cfg = EnvConfig{};
  cfg.randomization.volume_noise_range = -1;
  CHECK_THROWS_AS(cfg.Validate(), ParameterError);
}

}  // TEST_SUITE

}  // namespace
}  // namespace auvsim

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

#include "auvsim/thrusters.h"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

namespace auvsim {

ThrusterConfig ThrusterConfig::Default() {
  ThrusterConfig cfg;
  cfg.mounts = {
      {Vec3(-0.2, 0.15, 0.0), Vec3::UnitX()},   // surge, port
      {Vec3(-0.2, -0.15, 0.0), Vec3::UnitX()},  // surge, starboard
      {Vec3(0.1, 0.0, 0.0), Vec3::UnitY()},     // sway
      {Vec3(0.25, 0.0, 0.0), Vec3::UnitZ()},    // heave, bow
      {Vec3(-0.15, 0.15, 0.0), Vec3::UnitZ()},  // heave, aft port
      {Vec3(-0.15, -0.15, 0.0), Vec3::UnitZ()},  // heave, aft starboard
  };
  return cfg;
}

void ThrusterConfig::Validate() const {
  const std::string prefix = "vehicle.thrusters.";
  if (mounts.size() != kNumThrusters) {
    throw ParameterError(prefix + "layout",
                         "expected exactly 6 thrusters, got " +
                             std::to_string(mounts.size()));
  }
  for (size_t i = 0; i < mounts.size(); ++i) {
    const std::string field = prefix + "layout[" + std::to_string(i) + "]";
    if (!mounts[i].position.allFinite()) {
      throw ParameterError(field + ".position", "must be finite");
    }
    if (std::abs(mounts[i].direction.norm() - 1.0) > 1e-9) {
      throw ParameterError(field + ".direction", "must be a unit vector");
    }
  }
  if (!(rotor_constant > 0.0) || !std::isfinite(rotor_constant)) {
    throw ParameterError(prefix + "rotor_constant", "must be positive");
  }
  if (!(omega_max > 0.0) || !std::isfinite(omega_max)) {
    throw ParameterError(prefix + "omega_max", "must be positive");
  }
  if (!(pwm_span > 0.0) || !std::isfinite(pwm_span)) {
    throw ParameterError(prefix + "pwm_span", "must be positive");
  }
  if (!(pwm_deadband >= 0.0) || pwm_deadband >= pwm_span) {
    throw ParameterError(prefix + "pwm_deadband",
                         "must lie in [0, pwm_span)");
  }
  if (!std::isfinite(pwm_neutral)) {
    throw ParameterError(prefix + "pwm_neutral", "must be finite");
  }
  Eigen::FullPivLU<Eigen::Matrix<double, 6, Eigen::Dynamic>> lu(
      AllocationMatrix(*this));
  if (lu.rank() < 6) {
    throw ParameterError(prefix + "layout",
                         "allocation matrix has rank " +
                             std::to_string(lu.rank()) +
                             " < 6; layout cannot actuate all six axes");
  }
}

Eigen::Matrix<double, 6, Eigen::Dynamic> AllocationMatrix(
    const ThrusterConfig& cfg) {
  Eigen::Matrix<double, 6, Eigen::Dynamic> a(6, cfg.mounts.size());
  for (size_t i = 0; i < cfg.mounts.size(); ++i) {
    const ThrusterMount& m = cfg.mounts[i];
    a.col(i).head<3>() = m.direction;
    a.col(i).tail<3>() = m.position.cross(m.direction);
  }
  return a;
}

Action ActionToPwm(std::span<const double, kNumThrusters> u,
                   const ThrusterConfig& cfg) {
  Action pwm;
  for (int i = 0; i < kNumThrusters; ++i) {
    pwm[i] = cfg.pwm_neutral + cfg.pwm_span * std::clamp(u[i], -1.0, 1.0);
  }
  return pwm;
}

double PwmToOmega(double pwm, const ThrusterConfig& cfg) {
  const double delta = pwm - cfg.pwm_neutral;
  const double magnitude = std::abs(delta);
  if (!(magnitude <= cfg.pwm_span)) {
    throw ParameterError("pwm", "command " + std::to_string(pwm) +
                                    " us outside the thruster range");
  }
  if (magnitude <= cfg.pwm_deadband) return 0.0;
  const double omega = cfg.omega_max * (magnitude - cfg.pwm_deadband) /
                       (cfg.pwm_span - cfg.pwm_deadband);
  return delta > 0.0 ? omega : -omega;
}

Wrench AllocateWrench(std::span<const double> thrusts,
                      const ThrusterConfig& cfg) {
  Wrench out;
  for (size_t i = 0; i < cfg.mounts.size(); ++i) {
    const Vec3 f = thrusts[i] * cfg.mounts[i].direction;
    out.force += f;
    out.torque += cfg.mounts[i].position.cross(f);
  }
  return out;
}

Wrench ActionToWrench(std::span<const double, kNumThrusters> u,
                      const ThrusterConfig& cfg) {
  const Action pwm = ActionToPwm(u, cfg);
  std::array<double, kNumThrusters> thrust;
  for (int i = 0; i < kNumThrusters; ++i) {
    thrust[i] = ThrustFromOmega(PwmToOmega(pwm[i], cfg), cfg.rotor_constant);
  }
  return AllocateWrench(thrust, cfg);
}

}  // namespace auvsim

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

#ifndef AUVSIM_THRUSTERS_H_
#define AUVSIM_THRUSTERS_H_

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "auvsim/rigid_body.h"

namespace auvsim {

inline constexpr int kNumThrusters = 6;

using Action = std::array<double, kNumThrusters>;

// Invalid physical or configuration parameter. `field` is the dotted config
// path of the offending value (e.g. "vehicle.mass").
class ParameterError : public std::invalid_argument {
 public:
  ParameterError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message),
        field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct ThrusterMount {
  Vec3 position = Vec3::Zero();  // m, body frame
  Vec3 direction = Vec3::UnitX();  // unit, body frame
};

// Six identical thrusters. The PWM -> propeller speed curve is an affine map
// with a symmetric deadband around neutral.
struct ThrusterConfig {
  std::vector<ThrusterMount> mounts;
  double rotor_constant = 0.001;  // C_t
  double omega_max = 230.0;       // rad/s at full PWM span
  double pwm_neutral = 1500.0;    // us
  double pwm_span = 400.0;        // us
  double pwm_deadband = 25.0;     // us

  // Two surge thrusters aft, one sway thruster forward of the COM, and three
  // heave thrusters in a triangle for roll/pitch authority.
  static ThrusterConfig Default();

  // Throws ParameterError. Also rejects layouts whose allocation matrix is
  // rank deficient.
  void Validate() const;
};

// 6 x n map from per-thruster thrust (N) to the stacked body wrench
// [force; torque].
Eigen::Matrix<double, 6, Eigen::Dynamic> AllocationMatrix(
    const ThrusterConfig& cfg);

// pwm_i = neutral + span * clamp(u_i, -1, 1).
Action ActionToPwm(std::span<const double, kNumThrusters> u,
                   const ThrusterConfig& cfg);

// Signed propeller speed for a PWM command. Throws ParameterError outside
// [neutral - span, neutral + span].
double PwmToOmega(double pwm, const ThrusterConfig& cfg);

// Sign-preserving quadratic thrust C_t * |omega| * omega.
inline double ThrustFromOmega(double omega, double rotor_constant) {
  return rotor_constant * (omega < 0.0 ? -omega : omega) * omega;
}

// Sums thrust_i * direction_i and the moments position_i x force_i.
Wrench AllocateWrench(std::span<const double> thrusts,
                      const ThrusterConfig& cfg);

// action -> pwm -> omega -> thrust -> wrench.
Wrench ActionToWrench(std::span<const double, kNumThrusters> u,
                      const ThrusterConfig& cfg);

}  // namespace auvsim

#endif  // AUVSIM_THRUSTERS_H_

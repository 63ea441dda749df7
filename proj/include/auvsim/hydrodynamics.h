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

// Fluid forces on a fully submerged vehicle: quadratic drag and linear
// viscous resistance of an equivalent box, buoyancy acting at the center of
// buoyancy, and weight acting at the center of mass (the body origin).

#ifndef AUVSIM_HYDRODYNAMICS_H_
#define AUVSIM_HYDRODYNAMICS_H_

#include "auvsim/rigid_body.h"
#include "auvsim/thrusters.h"

namespace auvsim {

struct VehicleParams {
  double mass = 22.701;                 // kg
  Mat3 inertia = DefaultInertia();      // kg*m^2 about the COM
  double volume = 0.02275;              // m^3
  Vec3 cob_offset{-0.05, 0.0, 0.01};    // m, COM -> COB, body frame
  double water_density = 997.0;         // kg/m^3
  double water_viscosity = 0.001306;    // Pa*s
  double gravity = 9.81;                // m/s^2, world -z
  ThrusterConfig thrusters = ThrusterConfig::Default();

  // Uniform box with half-sides (0.3, 0.2, 0.15) m at the default mass.
  static Mat3 DefaultInertia();

  // Throws ParameterError naming the first invalid field.
  void Validate() const;
};

struct EquivalentBox {
  Vec3 half_sides = Vec3::Zero();  // r_x, r_y, r_z
  double r_eq = 0.0;               // (r_x + r_y + r_z) / 3
};

// Half side lengths of the uniform box with the same mass and principal
// moments: r_i = sqrt(3 / (2M) * (I_jj + I_kk - I_ii)).
EquivalentBox EquivalentRadii(double mass, const Mat3& inertia);

Wrench DragWrench(const EquivalentBox& box, const Vec3& lin_vel,
                  const Vec3& ang_vel, double density);

Wrench ViscousWrench(const EquivalentBox& box, const Vec3& lin_vel,
                     const Vec3& ang_vel, double viscosity);

Wrench BuoyancyWrench(const UnitQuat& orientation, const VehicleParams& params);

Wrench GravityWrench(const UnitQuat& orientation, const VehicleParams& params);

// Validates params, then sums drag, viscous, buoyancy and gravity.
Wrench TotalHydroWrench(const RigidBodyState& state,
                        const VehicleParams& params);

// Validated params with the derived quantities the hot loop needs.
class HydroModel {
 public:
  explicit HydroModel(const VehicleParams& params);

  Wrench Compute(const RigidBodyState& state) const;

  const VehicleParams& params() const { return params_; }
  const EquivalentBox& box() const { return box_; }
  const MassProperties& mass_properties() const { return body_; }

 private:
  VehicleParams params_;
  EquivalentBox box_;
  MassProperties body_;
};

}  // namespace auvsim

#endif  // AUVSIM_HYDRODYNAMICS_H_

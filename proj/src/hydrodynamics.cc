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

#include "auvsim/hydrodynamics.h"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>

namespace auvsim {
namespace {

constexpr const char* kAxisNames[3] = {"x", "y", "z"};

double Radicand(double mass, const Mat3& inertia, int i) {
  const int j = (i + 1) % 3;
  const int k = (i + 2) % 3;
  return 3.0 / (2.0 * mass) *
         (inertia(j, j) + inertia(k, k) - inertia(i, i));
}

}  // namespace

Mat3 VehicleParams::DefaultInertia() {
  constexpr double kMass = 22.701;
  const Vec3 r(0.3, 0.2, 0.15);
  const Vec3 r2 = r.cwiseProduct(r);
  return (kMass / 3.0 * Vec3(r2.y() + r2.z(), r2.x() + r2.z(),
                             r2.x() + r2.y()))
      .asDiagonal();
}

void VehicleParams::Validate() const {
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw ParameterError("vehicle.mass", "must be positive");
  }
  if (!(volume >= 0.0) || !std::isfinite(volume)) {
    throw ParameterError("vehicle.volume", "must be non-negative");
  }
  if (!(water_density > 0.0) || !std::isfinite(water_density)) {
    throw ParameterError("vehicle.water_density", "must be positive");
  }
  if (!(water_viscosity >= 0.0) || !std::isfinite(water_viscosity)) {
    throw ParameterError("vehicle.water_viscosity", "must be non-negative");
  }
  if (!(gravity >= 0.0) || !std::isfinite(gravity)) {
    throw ParameterError("vehicle.gravity", "must be non-negative");
  }
  if (!cob_offset.allFinite()) {
    throw ParameterError("vehicle.cob_offset", "must be finite");
  }
  if (!inertia.allFinite() ||
      (inertia - inertia.transpose()).norm() > 1e-12 * inertia.norm()) {
    throw ParameterError("vehicle.inertia", "must be finite and symmetric");
  }
  Eigen::LLT<Mat3> llt(inertia);
  if (llt.info() != Eigen::Success) {
    throw ParameterError("vehicle.inertia", "must be positive definite");
  }
  for (int i = 0; i < 3; ++i) {
    if (Radicand(mass, inertia, i) < -1e-12 * inertia.trace()) {
      throw ParameterError(
          "vehicle.inertia",
          std::string("violates the triangle inequality on axis ") +
              kAxisNames[i] + " (I_jj + I_kk < I_ii)");
    }
  }
  thrusters.Validate();
}

EquivalentBox EquivalentRadii(double mass, const Mat3& inertia) {
  EquivalentBox box;
  for (int i = 0; i < 3; ++i) {
    const double radicand = Radicand(mass, inertia, i);
    if (radicand < 0.0) {
      if (radicand < -1e-12 * std::abs(inertia.trace())) {
        throw ParameterError(
            "vehicle.inertia",
            std::string("negative equivalent-box radicand on axis ") +
                kAxisNames[i]);
      }
      box.half_sides[i] = 0.0;
    } else {
      box.half_sides[i] = std::sqrt(radicand);
    }
  }
  box.r_eq = (box.half_sides.x() + box.half_sides.y() + box.half_sides.z()) /
             3.0;
  return box;
}

Wrench DragWrench(const EquivalentBox& box, const Vec3& lin_vel,
                  const Vec3& ang_vel, double density) {
  const Vec3& r = box.half_sides;
  Wrench out;
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    const int k = (i + 2) % 3;
    const double rj2 = r[j] * r[j];
    const double rk2 = r[k] * r[k];
    out.force[i] =
        -2.0 * density * r[j] * r[k] * std::abs(lin_vel[i]) * lin_vel[i];
    out.torque[i] = -0.5 * density * r[i] * (rj2 * rj2 + rk2 * rk2) *
                    std::abs(ang_vel[i]) * ang_vel[i];
  }
  return out;
}

Wrench ViscousWrench(const EquivalentBox& box, const Vec3& lin_vel,
                     const Vec3& ang_vel, double viscosity) {
  constexpr double kPi = std::numbers::pi;
  const double r = box.r_eq;
  return {-6.0 * viscosity * kPi * r * lin_vel,
          -8.0 * viscosity * kPi * r * r * r * ang_vel};
}

Wrench BuoyancyWrench(const UnitQuat& orientation,
                      const VehicleParams& params) {
  const double lift = params.water_density * params.volume * params.gravity;
  const Vec3 force = orientation.InverseRotate(Vec3(0.0, 0.0, lift));
  return {force, params.cob_offset.cross(force)};
}

Wrench GravityWrench(const UnitQuat& orientation,
                     const VehicleParams& params) {
  const double weight = params.mass * params.gravity;
  return {orientation.InverseRotate(Vec3(0.0, 0.0, -weight)), Vec3::Zero()};
}

Wrench TotalHydroWrench(const RigidBodyState& state,
                        const VehicleParams& params) {
  return HydroModel(params).Compute(state);
}

HydroModel::HydroModel(const VehicleParams& params) : params_(params) {
  params_.Validate();
  box_ = EquivalentRadii(params_.mass, params_.inertia);
  body_ = MassProperties::FromInertia(params_.mass, params_.inertia);
}

Wrench HydroModel::Compute(const RigidBodyState& state) const {
  Wrench out = DragWrench(box_, state.lin_vel, state.ang_vel,
                          params_.water_density);
  out += ViscousWrench(box_, state.lin_vel, state.ang_vel,
                       params_.water_viscosity);
  out += BuoyancyWrench(state.orientation, params_);
  out += GravityWrench(state.orientation, params_);
  return out;
}

}  // namespace auvsim

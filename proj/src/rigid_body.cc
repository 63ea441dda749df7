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

#include "auvsim/rigid_body.h"

#include <algorithm>
#include <cmath>

namespace auvsim {

UnitQuat::UnitQuat(double w, double x, double y, double z) : q_(w, x, y, z) {
  const double norm = q_.norm();
  if (!std::isfinite(norm) || norm == 0.0) {
    throw std::invalid_argument("quaternion must be finite and nonzero");
  }
  q_.coeffs() /= norm;
}

UnitQuat UnitQuat::FromAxisAngle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (n == 0.0) return Identity();
  const Vec3 u = axis / n;
  const double s = std::sin(0.5 * angle);
  return UnitQuat(std::cos(0.5 * angle), s * u.x(), s * u.y(), s * u.z());
}

UnitQuat UnitQuat::FromRollPitchYaw(double roll, double pitch, double yaw) {
  return FromAxisAngle(Vec3::UnitZ(), yaw) *
         FromAxisAngle(Vec3::UnitY(), pitch) *
         FromAxisAngle(Vec3::UnitX(), roll);
}

UnitQuat UnitQuat::FromRotationVector(const Vec3& rotation) {
  const double angle = rotation.norm();
  if (angle == 0.0) return Identity();
  return FromAxisAngle(rotation / angle, angle);
}

UnitQuat UnitQuat::operator*(const UnitQuat& other) const {
  const Eigen::Quaterniond p = q_ * other.q_;
  return UnitQuat(p.w(), p.x(), p.y(), p.z());
}

double QuatAngleBetween(const UnitQuat& q_des, const UnitQuat& q) {
  // The scalar part of q_des * conj(q) is the 4-vector dot product.
  const double c = std::abs(q_des.Dot(q));
  const Eigen::Quaterniond d = q_des.eigen() * q.eigen().conjugate();
  const double s = d.vec().norm();
  return 2.0 * std::atan2(s, c);
}

UnitQuat QuatSlerp(const UnitQuat& q0, UnitQuat q1, double t) {
  double dot = q0.Dot(q1);
  if (dot < 0.0) {
    q1 = -q1;
    dot = -dot;
  }
  double w0;
  double w1;
  if (dot > 1.0 - 1e-9) {
    w0 = 1.0 - t;
    w1 = t;
  } else {
    const double theta = std::acos(std::min(dot, 1.0));
    const double sin_theta = std::sin(theta);
    w0 = std::sin((1.0 - t) * theta) / sin_theta;
    w1 = std::sin(t * theta) / sin_theta;
  }
  return UnitQuat(w0 * q0.w() + w1 * q1.w(), w0 * q0.x() + w1 * q1.x(),
                  w0 * q0.y() + w1 * q1.y(), w0 * q0.z() + w1 * q1.z());
}

MassProperties MassProperties::FromInertia(double mass, const Mat3& inertia) {
  MassProperties out;
  out.mass = mass;
  out.inertia = inertia;
  out.inverse_inertia = inertia.inverse();
  return out;
}

RigidBodyState IntegrateStep(const RigidBodyState& state, const Wrench& wrench,
                             const MassProperties& body, double dt) {
  if (!wrench.IsFinite()) {
    throw DivergenceError("non-finite wrench applied to rigid body");
  }
  const Vec3& v = state.lin_vel;
  const Vec3& w = state.ang_vel;

  RigidBodyState next;
  next.lin_vel = v + dt * (wrench.force / body.mass - w.cross(v));
  next.ang_vel =
      w + dt * (body.inverse_inertia *
                (wrench.torque - w.cross(body.inertia * w)));
  next.position =
      state.position + dt * state.orientation.Rotate(next.lin_vel);

  if (!next.position.allFinite() || !next.lin_vel.allFinite() ||
      !next.ang_vel.allFinite()) {
    throw DivergenceError("rigid body state became non-finite");
  }

  const Vec3 rotation = dt * next.ang_vel;
  // An exactly zero rotation leaves the orientation bitwise untouched.
  next.orientation = (rotation.array() == 0.0).all()
                         ? state.orientation
                         : state.orientation *
                               UnitQuat::FromRotationVector(rotation);

  if (!next.IsFinite()) {
    throw DivergenceError("rigid body state became non-finite");
  }
  return next;
}

}  // namespace auvsim

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

#ifndef AUVSIM_RIGID_BODY_H_
#define AUVSIM_RIGID_BODY_H_

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <stdexcept>
#include <string>

namespace auvsim {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Raised when a simulated quantity stops being finite.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what)
      : std::runtime_error(what) {}
};

// Unit quaternion, scalar-first, rotating body-frame vectors into the world
// frame. Every constructor and operation returns a normalized value.
class UnitQuat {
 public:
  UnitQuat() : q_(1.0, 0.0, 0.0, 0.0) {}

  // Normalizes (w, x, y, z). Throws std::invalid_argument on a zero or
  // non-finite input.
  UnitQuat(double w, double x, double y, double z);

  static UnitQuat Identity() { return UnitQuat(); }
  static UnitQuat FromAxisAngle(const Vec3& axis, double angle);
  // Intrinsic roll-pitch-yaw (Z-Y-X): q = yaw(z) * pitch(y) * roll(x).
  static UnitQuat FromRollPitchYaw(double roll, double pitch, double yaw);
  // exp(rotation_vector / 2); identity for a zero vector.
  static UnitQuat FromRotationVector(const Vec3& rotation);

  double w() const { return q_.w(); }
  double x() const { return q_.x(); }
  double y() const { return q_.y(); }
  double z() const { return q_.z(); }
  Vec3 vec() const { return q_.vec(); }
  const Eigen::Quaterniond& eigen() const { return q_; }

  UnitQuat Conjugate() const { return FromNormalized(q_.conjugate()); }
  UnitQuat operator-() const {
    return FromNormalized(Eigen::Quaterniond(-q_.w(), -q_.x(), -q_.y(),
                                             -q_.z()));
  }
  UnitQuat operator*(const UnitQuat& other) const;

  double Dot(const UnitQuat& other) const {
    return q_.w() * other.q_.w() + q_.x() * other.q_.x() +
           q_.y() * other.q_.y() + q_.z() * other.q_.z();
  }

  // Representative of the same rotation with w >= 0.
  UnitQuat Canonical() const { return w() < 0.0 ? -*this : *this; }

  Vec3 Rotate(const Vec3& v) const { return q_ * v; }
  Vec3 InverseRotate(const Vec3& v) const { return q_.conjugate() * v; }
  Mat3 ToRotationMatrix() const { return q_.toRotationMatrix(); }

  bool operator==(const UnitQuat& other) const {
    return q_.coeffs() == other.q_.coeffs();
  }

 private:
  static UnitQuat FromNormalized(const Eigen::Quaterniond& q) {
    UnitQuat out;
    out.q_ = q;
    return out;
  }

  Eigen::Quaterniond q_;
};

// Rotates v by q (body to world).
inline Vec3 QuatRotate(const UnitQuat& q, const Vec3& v) {
  return q.Rotate(v);
}

// Rotation angle in [0, pi] of q_des * conj(q). Symmetric and insensitive to
// the sign of either argument.
double QuatAngleBetween(const UnitQuat& q_des, const UnitQuat& q);

// Shortest-path spherical interpolation. Falls back to normalized linear
// interpolation when the inputs are nearly parallel.
UnitQuat QuatSlerp(const UnitQuat& q0, UnitQuat q1, double t);

struct Wrench {
  Vec3 force = Vec3::Zero();   // N, body frame
  Vec3 torque = Vec3::Zero();  // N*m, body frame

  Wrench& operator+=(const Wrench& other) {
    force += other.force;
    torque += other.torque;
    return *this;
  }
  friend Wrench operator+(Wrench a, const Wrench& b) { return a += b; }
  friend Wrench operator-(const Wrench& w) { return {-w.force, -w.torque}; }
  bool IsFinite() const { return force.allFinite() && torque.allFinite(); }
};

struct RigidBodyState {
  Vec3 position = Vec3::Zero();  // m, world
  UnitQuat orientation;          // body -> world
  Vec3 lin_vel = Vec3::Zero();   // m/s, body
  Vec3 ang_vel = Vec3::Zero();   // rad/s, body

  bool IsFinite() const {
    return position.allFinite() && orientation.eigen().coeffs().allFinite() &&
           lin_vel.allFinite() && ang_vel.allFinite();
  }
  bool operator==(const RigidBodyState& other) const {
    return position == other.position && orientation == other.orientation &&
           lin_vel == other.lin_vel && ang_vel == other.ang_vel;
  }
};

// Mass and rotational inertia about the body origin (the COM).
struct MassProperties {
  double mass = 1.0;
  Mat3 inertia = Mat3::Identity();
  Mat3 inverse_inertia = Mat3::Identity();

  static MassProperties FromInertia(double mass, const Mat3& inertia);
};

// Advances the state by one semi-implicit Euler step under a constant
// body-frame wrench. Velocities are updated first (including the rigid-body
// transport and gyroscopic terms), then pose from the new velocities.
// Throws DivergenceError on a non-finite wrench or resulting state.
RigidBodyState IntegrateStep(const RigidBodyState& state, const Wrench& wrench,
                             const MassProperties& body, double dt);

}  // namespace auvsim

#endif  // AUVSIM_RIGID_BODY_H_

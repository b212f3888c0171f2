#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>

#include "bluelight/errors.hpp"

namespace bluelight {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Unit direction vector. Normalized on construction so the norm holds to
// 1e-12; a zero-length input is rejected.
class Ray3 {
 public:
  Ray3() : v_(0.0, 0.0, 1.0) {}
  explicit Ray3(const Vec3& v) : v_(v) {
    const double n = v_.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw InvariantViolation("Ray3: direction must have positive finite norm");
    }
    v_ /= n;
  }
  Ray3(double x, double y, double z) : Ray3(Vec3(x, y, z)) {}

  const Vec3& vec() const { return v_; }
  double x() const { return v_.x(); }
  double y() const { return v_.y(); }
  double z() const { return v_.z(); }

 private:
  Vec3 v_;
};

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

// Rodrigues exponential map, with the series expansion near zero.
inline Mat3 exp_so3(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const Mat3 w = skew(omega);
  if (theta2 < 1e-16) {
    return Mat3::Identity() + w + 0.5 * (w * w);
  }
  const double theta = std::sqrt(theta2);
  return Mat3::Identity() + (std::sin(theta) / theta) * w +
         ((1.0 - std::cos(theta)) / theta2) * (w * w);
}

// Inverse of exp_so3; rotation angle returned in [0, pi].
inline Vec3 log_so3(const Mat3& r) {
  const double cos_theta = std::clamp((r.trace() - 1.0) * 0.5, -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  const Vec3 axis_raw(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  if (theta < 1e-9) {
    return 0.5 * axis_raw;
  }
  if (theta > kPi - 1e-6) {
    // Near pi the off-diagonal difference vanishes; recover the axis from
    // the symmetric part instead.
    Vec3 axis;
    const Mat3 s = 0.5 * (r + Mat3::Identity());
    axis = Vec3(std::sqrt(std::max(0.0, s(0, 0))), std::sqrt(std::max(0.0, s(1, 1))),
                std::sqrt(std::max(0.0, s(2, 2))));
    int major = 0;
    if (axis.y() > axis.x()) major = 1;
    if (axis.z() > axis[major]) major = 2;
    if (axis[major] < 1e-12) return Vec3::Zero();
    // Fix signs against the skew part where it is nonzero.
    if (major == 0) {
      axis.y() = std::copysign(axis.y(), s(0, 1));
      axis.z() = std::copysign(axis.z(), s(0, 2));
    } else if (major == 1) {
      axis.x() = std::copysign(axis.x(), s(0, 1));
      axis.z() = std::copysign(axis.z(), s(1, 2));
    } else {
      axis.x() = std::copysign(axis.x(), s(0, 2));
      axis.y() = std::copysign(axis.y(), s(1, 2));
    }
    return theta * axis.normalized();
  }
  return (theta / (2.0 * std::sin(theta))) * axis_raw;
}

// Quaternion (w, x, y, z) to rotation matrix. The input need not be
// perfectly normalized; it is normalized here.
inline Mat3 quaternion_to_rotation(double w, double x, double y, double z) {
  Eigen::Quaterniond q(w, x, y, z);
  const double n = q.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw InvariantViolation("quaternion_to_rotation: zero quaternion");
  }
  q.normalize();
  return q.toRotationMatrix();
}

// Rotation matrix to quaternion (w, x, y, z), canonicalized to w >= 0.
inline Eigen::Vector4d rotation_to_quaternion(const Mat3& r) {
  Eigen::Quaterniond q(r);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return Eigen::Vector4d(q.w(), q.x(), q.y(), q.z());
}

inline bool is_rotation(const Mat3& r, double tol = 1e-9) {
  const Mat3 should_be_identity = r.transpose() * r;
  if ((should_be_identity - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(r.determinant() - 1.0) <= tol;
}

// Rigid transform y = R x + t.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  RigidTransform inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }
  RigidTransform compose(const RigidTransform& inner) const {
    // (*this) after inner: y = R_outer (R_inner x + t_inner) + t_outer
    return {rotation * inner.rotation, rotation * inner.translation + translation};
  }
};

}  // namespace bluelight

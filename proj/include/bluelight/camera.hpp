#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "bluelight/errors.hpp"
#include "bluelight/geometry.hpp"

namespace bluelight {

inline constexpr double kDefaultMaxThetaDeg = 95.0;
inline constexpr int kMonotonicitySamples = 1024;
inline constexpr int kUnprojectMaxIterations = 50;
inline constexpr double kUnprojectToleranceRad = 1e-12;

// Fisheye camera intrinsics: equidistant projection with a polynomial in the
// incidence angle theta,
//
//   theta_d = theta * (1 + k1 theta^2 + k2 theta^4 + k3 theta^6 + k4 theta^8)
//   u = fx * theta_d * cos(phi) + cx,  v = fy * theta_d * sin(phi) + cy
//
// The polynomial must be strictly increasing on [0, max_theta]; validate()
// checks this by sampling, and everything downstream (unprojection, image
// warping, calibration) relies on it.
struct CameraIntrinsics {
  double fx = 0.0, fy = 0.0;
  double cx = 0.0, cy = 0.0;
  double k1 = 0.0, k2 = 0.0, k3 = 0.0, k4 = 0.0;
  int width = 0, height = 0;
  // Half-angle of the validated field of view, radians.
  double max_theta = deg_to_rad(kDefaultMaxThetaDeg);

  double distort_angle(double theta) const {
    const double t2 = theta * theta;
    return theta * (1.0 + t2 * (k1 + t2 * (k2 + t2 * (k3 + t2 * k4))));
  }

  double distort_angle_derivative(double theta) const {
    const double t2 = theta * theta;
    return 1.0 + t2 * (3.0 * k1 + t2 * (5.0 * k2 + t2 * (7.0 * k3 + t2 * 9.0 * k4)));
  }

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) {
      throw InvariantViolation("intrinsics: focal lengths must be positive");
    }
    if (width <= 0 || height <= 0) {
      throw InvariantViolation("intrinsics: sensor size must be positive");
    }
    if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
      throw InvariantViolation("intrinsics: principal point outside sensor");
    }
    if (!(max_theta > 0.0 && max_theta <= kPi)) {
      throw InvariantViolation("intrinsics: max_theta must lie in (0, pi]");
    }
    double prev = 0.0;
    for (int i = 1; i <= kMonotonicitySamples; ++i) {
      const double theta = max_theta * i / kMonotonicitySamples;
      const double value = distort_angle(theta);
      if (!(value > prev) || !(distort_angle_derivative(theta) > 0.0)) {
        throw MonotonicityViolation(
            "intrinsics: distortion polynomial not strictly increasing at theta=" +
            std::to_string(theta));
      }
      prev = value;
    }
  }
};

inline CameraIntrinsics make_intrinsics(double fx, double fy, double cx, double cy,
                                        double k1, double k2, double k3, double k4,
                                        int width, int height,
                                        double max_theta_deg = kDefaultMaxThetaDeg) {
  CameraIntrinsics intr{fx, fy, cx, cy, k1, k2, k3, k4, width, height,
                        deg_to_rad(max_theta_deg)};
  intr.validate();
  return intr;
}

// Camera pose in the vehicle frame: X_veh = R * X_cam + T.
// Conventions: camera frame is +Z forward, +X right, +Y down; vehicle frame
// is +X forward, +Y left, +Z up.
struct CameraExtrinsics {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  void validate() const {
    if (!is_rotation(rotation, 1e-9)) {
      throw InvariantViolation("extrinsics: rotation is not orthonormal");
    }
    if (!translation.allFinite()) {
      throw InvariantViolation("extrinsics: translation is not finite");
    }
  }
};

inline Vec2 fisheye_project(const Vec3& point, const CameraIntrinsics& intr) {
  const double r = std::hypot(point.x(), point.y());
  const double theta = std::atan2(r, point.z());
  if (theta > intr.max_theta) {
    throw OutOfModelRange("fisheye_project: incidence angle " + std::to_string(theta) +
                          " rad exceeds validated interval");
  }
  if (r == 0.0) {
    return Vec2(intr.cx, intr.cy);
  }
  const double theta_d = intr.distort_angle(theta);
  return Vec2(intr.fx * theta_d * point.x() / r + intr.cx,
              intr.fy * theta_d * point.y() / r + intr.cy);
}

// Inverts the angle polynomial by Newton iteration started at theta_d, which
// converges on the validated monotone interval.
inline Ray3 fisheye_unproject(const Vec2& pixel, const CameraIntrinsics& intr) {
  const double mx = (pixel.x() - intr.cx) / intr.fx;
  const double my = (pixel.y() - intr.cy) / intr.fy;
  const double radius = std::hypot(mx, my);
  if (radius == 0.0) {
    return Ray3(0.0, 0.0, 1.0);
  }
  const double max_radius = intr.distort_angle(intr.max_theta);
  if (radius > max_radius * (1.0 + 1e-12)) {
    throw OutOfModelRange("fisheye_unproject: pixel radius beyond validated interval");
  }
  double theta = std::min(radius, intr.max_theta);
  bool converged = false;
  for (int i = 0; i < kUnprojectMaxIterations; ++i) {
    const double f = intr.distort_angle(theta) - radius;
    const double step = f / intr.distort_angle_derivative(theta);
    const double next = std::clamp(theta - step, 0.0, intr.max_theta);
    const double delta = std::abs(next - theta);
    theta = next;
    if (delta < kUnprojectToleranceRad) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NoConvergence("fisheye_unproject: Newton iteration did not reach tolerance");
  }
  const double s = std::sin(theta);
  return Ray3(s * mx / radius, s * my / radius, std::cos(theta));
}

inline Vec2 pinhole_project(const Vec3& point, double fx, double fy, double cx,
                            double cy) {
  if (!(point.z() > 0.0)) {
    throw BehindCamera("pinhole_project: point depth must be positive");
  }
  return Vec2(fx * point.x() / point.z() + cx, fy * point.y() / point.z() + cy);
}

inline Vec2 pinhole_project(const Vec3& point, const CameraIntrinsics& intr) {
  return pinhole_project(point, intr.fx, intr.fy, intr.cx, intr.cy);
}

inline Ray3 pinhole_unproject(const Vec2& pixel, double fx, double fy, double cx,
                              double cy) {
  return Ray3((pixel.x() - cx) / fx, (pixel.y() - cy) / fy, 1.0);
}

inline Ray3 pinhole_unproject(const Vec2& pixel, const CameraIntrinsics& intr) {
  return pinhole_unproject(pixel, intr.fx, intr.fy, intr.cx, intr.cy);
}

// Direction-only rotation into the vehicle frame; the mounting translation is
// intentionally not applied, so the result is a bearing, not a position.
inline Ray3 transform_to_vehicle(const Ray3& ray, const CameraExtrinsics& extr) {
  return Ray3(extr.rotation * ray.vec());
}

// Projection with partial derivatives, for the calibration solvers. Unlike
// fisheye_project this does not range-check: optimizer iterates may walk
// through angles beyond the validated interval, where the polynomial is still
// a perfectly smooth function.
//
// d_point is 2x3 (du,dv over dx,dy,dz); d_intrinsics is 2x8 over
// (fx, fy, cx, cy, k1, k2, k3, k4).
inline Vec2 fisheye_project_with_jacobians(const Vec3& point, const CameraIntrinsics& intr,
                                           Eigen::Matrix<double, 2, 3>* d_point,
                                           Eigen::Matrix<double, 2, 8>* d_intrinsics) {
  const double x = point.x(), y = point.y(), z = point.z();
  const double r2 = x * x + y * y;
  const double r = std::sqrt(r2);
  if (r < 1e-14) {
    // On the optical axis the model reduces to the pinhole limit.
    if (d_point) {
      d_point->setZero();
      (*d_point)(0, 0) = intr.fx / z;
      (*d_point)(1, 1) = intr.fy / z;
    }
    if (d_intrinsics) {
      d_intrinsics->setZero();
      (*d_intrinsics)(0, 2) = 1.0;
      (*d_intrinsics)(1, 3) = 1.0;
    }
    return Vec2(intr.cx, intr.cy);
  }
  const double theta = std::atan2(r, z);
  const double theta_d = intr.distort_angle(theta);
  const double cos_phi = x / r;
  const double sin_phi = y / r;
  const Vec2 pixel(intr.fx * theta_d * cos_phi + intr.cx,
                   intr.fy * theta_d * sin_phi + intr.cy);
  if (d_intrinsics) {
    const double t2 = theta * theta;
    const double t3 = t2 * theta;
    const double t5 = t3 * t2;
    const double t7 = t5 * t2;
    const double t9 = t7 * t2;
    d_intrinsics->setZero();
    (*d_intrinsics)(0, 0) = theta_d * cos_phi;
    (*d_intrinsics)(1, 1) = theta_d * sin_phi;
    (*d_intrinsics)(0, 2) = 1.0;
    (*d_intrinsics)(1, 3) = 1.0;
    (*d_intrinsics)(0, 4) = intr.fx * cos_phi * t3;
    (*d_intrinsics)(1, 4) = intr.fy * sin_phi * t3;
    (*d_intrinsics)(0, 5) = intr.fx * cos_phi * t5;
    (*d_intrinsics)(1, 5) = intr.fy * sin_phi * t5;
    (*d_intrinsics)(0, 6) = intr.fx * cos_phi * t7;
    (*d_intrinsics)(1, 6) = intr.fy * sin_phi * t7;
    (*d_intrinsics)(0, 7) = intr.fx * cos_phi * t9;
    (*d_intrinsics)(1, 7) = intr.fy * sin_phi * t9;
  }
  if (d_point) {
    const double rho2 = r2 + z * z;
    const double theta_dd = intr.distort_angle_derivative(theta);
    // dtheta over (x, y, z)
    const double dtheta_dx = (z / rho2) * (x / r);
    const double dtheta_dy = (z / rho2) * (y / r);
    const double dtheta_dz = -r / rho2;
    // d(cos_phi) and d(sin_phi)
    const double dcos_dx = 1.0 / r - x * x / (r * r2);
    const double dcos_dy = -x * y / (r * r2);
    const double dsin_dx = -x * y / (r * r2);
    const double dsin_dy = 1.0 / r - y * y / (r * r2);
    (*d_point)(0, 0) = intr.fx * (theta_dd * dtheta_dx * cos_phi + theta_d * dcos_dx);
    (*d_point)(0, 1) = intr.fx * (theta_dd * dtheta_dy * cos_phi + theta_d * dcos_dy);
    (*d_point)(0, 2) = intr.fx * theta_dd * dtheta_dz * cos_phi;
    (*d_point)(1, 0) = intr.fy * (theta_dd * dtheta_dx * sin_phi + theta_d * dsin_dx);
    (*d_point)(1, 1) = intr.fy * (theta_dd * dtheta_dy * sin_phi + theta_d * dsin_dy);
    (*d_point)(1, 2) = intr.fy * theta_dd * dtheta_dz * sin_phi;
  }
  return pixel;
}

}  // namespace bluelight

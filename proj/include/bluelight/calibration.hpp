#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bluelight/camera.hpp"
#include "bluelight/errors.hpp"
#include "bluelight/geometry.hpp"
#include "bluelight/levenberg_marquardt.hpp"

namespace bluelight {

// Chessboard view: board-frame 3D points paired with their observed pixels.
struct BoardObservation {
  std::string camera_id;
  std::vector<Vec3> board_points;  // board frame, meters (z = 0 plane)
  std::vector<Vec2> pixels;

  void validate() const {
    if (board_points.size() != pixels.size()) {
      throw InvariantViolation("board observation: point/pixel count mismatch");
    }
    if (board_points.size() < 6) {
      throw DegenerateGeometry("board observation: need at least 6 correspondences");
    }
  }
};

// Unit rays in two cameras' frames observing the same world points.
struct PairCorrespondence {
  std::string camera_a, camera_b;
  std::vector<Ray3> rays_a, rays_b;

  void validate() const {
    if (rays_a.size() != rays_b.size()) {
      throw InvariantViolation("pair correspondence: ray count mismatch");
    }
    if (rays_a.size() < 8) {
      throw DegenerateGeometry("pair correspondence: need at least 8 ray pairs");
    }
  }
};

// Pose of camera b in camera a's frame: X_a = R X_b + t. The translation is
// recovered up to scale (unit norm), or zero for a pure rotation.
struct RelativePose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
};

// Board observation whose board pose in the vehicle frame is known; the
// mechanism that fixes metric scale and the vehicle reference frame.
struct AnchoredBoard {
  BoardObservation observation;
  RigidTransform board_to_vehicle;
};

namespace detail {

// R minimizing sum |a_i - R b_i|^2 over rotations.
inline Mat3 kabsch_rotation(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  Mat3 cross = Mat3::Zero();
  for (std::size_t i = 0; i < a.size(); ++i) cross += a[i] * b[i].transpose();
  Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

// Second-smallest eigenvalue of the direction scatter; near zero means the
// rays span fewer than two independent directions.
inline double direction_spread(const std::vector<Ray3>& rays) {
  Mat3 scatter = Mat3::Zero();
  for (const Ray3& r : rays) scatter += r.vec() * r.vec().transpose();
  scatter /= static_cast<double>(rays.size());
  Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
  return eig.eigenvalues()[1];
}

// Orthonormal basis of the plane perpendicular to the unit vector t.
inline Eigen::Matrix<double, 3, 2> tangent_basis(const Vec3& t) {
  const Vec3 axis = std::abs(t.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  Eigen::Matrix<double, 3, 2> basis;
  basis.col(0) = t.cross(axis).normalized();
  basis.col(1) = t.cross(basis.col(0)).normalized();
  return basis;
}

// Pose of the board in the camera frame from unit view rays, by alternating
// depth estimates with rigid Umeyama alignment. Converges to the exact pose
// on noise-free data and serves as the initializer elsewhere.
inline RigidTransform solve_pose_from_rays(const std::vector<Vec3>& points,
                                           const std::vector<Vec3>& rays) {
  const int n = static_cast<int>(points.size());
  Eigen::Matrix3Xd src(3, n), dst(3, n);
  for (int i = 0; i < n; ++i) src.col(i) = points[i];
  std::vector<double> depths(n, 1.0);
  RigidTransform pose;
  for (int iter = 0; iter < 200; ++iter) {
    for (int i = 0; i < n; ++i) dst.col(i) = depths[i] * rays[i];
    const Eigen::Matrix4d t = Eigen::umeyama(src, dst, false);
    const Mat3 rotation = t.topLeftCorner<3, 3>();
    const Vec3 translation = t.topRightCorner<3, 1>();
    double shift = (rotation - pose.rotation).cwiseAbs().maxCoeff() +
                   (translation - pose.translation).cwiseAbs().maxCoeff();
    pose.rotation = rotation;
    pose.translation = translation;
    for (int i = 0; i < n; ++i) {
      depths[i] = std::max(1e-6, rays[i].dot(pose.apply(points[i])));
    }
    if (shift < 1e-15 && iter > 0) break;
  }
  return pose;
}

// Scalar coplanarity residual: the component of ray_b out of the plane
// spanned by ray_a and the baseline u, as the sine of the out-of-plane
// angle. Gradients are with respect to each input vector.
struct PlaneResidual {
  double value = 0.0;
  Eigen::RowVector3d d_ray_a = Eigen::RowVector3d::Zero();
  Eigen::RowVector3d d_ray_b = Eigen::RowVector3d::Zero();
  Eigen::RowVector3d d_u = Eigen::RowVector3d::Zero();
};

inline PlaneResidual epipolar_plane_residual(const Vec3& ray_a, const Vec3& ray_b,
                                             const Vec3& u) {
  PlaneResidual res;
  const Vec3 n = ray_a.cross(u);
  const double norm = n.norm();
  if (norm < 1e-12) return res;  // ray parallel to baseline; no constraint
  const Vec3 n_hat = n / norm;
  res.value = ray_b.dot(n_hat);
  res.d_ray_b = n_hat.transpose();
  const Eigen::RowVector3d d_value_d_n =
      ray_b.transpose() * (Mat3::Identity() - n_hat * n_hat.transpose()) / norm;
  res.d_ray_a = d_value_d_n * (-skew(u));
  res.d_u = d_value_d_n * skew(ray_a);
  return res;
}

}  // namespace detail

struct IntrinsicsFitResult {
  CameraIntrinsics intrinsics;
  std::vector<RigidTransform> board_poses;  // board -> camera, per observation
  double rms_reprojection_px = 0.0;         // per residual component
  LmReport report;
};

// Joint refinement of (fx, fy, cx, cy, k1..k4) and the per-view board poses
// against chessboard reprojections.
inline IntrinsicsFitResult fit_intrinsics(const std::vector<BoardObservation>& observations,
                                          const CameraIntrinsics& init,
                                          const LmSettings& settings = {}) {
  if (observations.size() < 3) {
    throw DegenerateGeometry("fit_intrinsics: need at least 3 board observations");
  }
  for (const auto& obs : observations) obs.validate();
  init.validate();

  struct State {
    CameraIntrinsics intr;
    std::vector<RigidTransform> boards;
  };
  State state{init, {}};
  for (const auto& obs : observations) {
    std::vector<Vec3> rays;
    rays.reserve(obs.pixels.size());
    for (const Vec2& px : obs.pixels) rays.push_back(fisheye_unproject(px, init).vec());
    state.boards.push_back(detail::solve_pose_from_rays(obs.board_points, rays));
  }

  // All boards (near-)parallel leave the focal/distortion split ill-posed.
  bool any_distinct = false;
  for (std::size_t i = 1; i < state.boards.size() && !any_distinct; ++i) {
    const Vec3 n0 = state.boards[0].rotation.col(2);
    const Vec3 ni = state.boards[i].rotation.col(2);
    if (std::abs(n0.dot(ni)) < std::cos(1e-2)) any_distinct = true;
  }
  if (!any_distinct) {
    throw DegenerateGeometry("fit_intrinsics: board orientations are all parallel");
  }

  int total_points = 0;
  for (const auto& obs : observations) total_points += static_cast<int>(obs.pixels.size());
  const int num_boards = static_cast<int>(observations.size());
  const int tangent_dim = 8 + 6 * num_boards;

  auto eval = [&](const State& s, Eigen::VectorXd& residuals, Eigen::MatrixXd* jacobian) {
    residuals.resize(2 * total_points);
    if (jacobian) jacobian->setZero(2 * total_points, tangent_dim);
    int row = 0;
    for (int b = 0; b < num_boards; ++b) {
      const auto& obs = observations[b];
      const RigidTransform& pose = s.boards[b];
      for (std::size_t j = 0; j < obs.board_points.size(); ++j) {
        const Vec3 p_cam = pose.apply(obs.board_points[j]);
        Eigen::Matrix<double, 2, 3> d_point;
        Eigen::Matrix<double, 2, 8> d_intr;
        const Vec2 pixel = fisheye_project_with_jacobians(
            p_cam, s.intr, jacobian ? &d_point : nullptr, jacobian ? &d_intr : nullptr);
        residuals.segment<2>(row) = pixel - obs.pixels[j];
        if (jacobian) {
          jacobian->block<2, 8>(row, 0) = d_intr;
          const int col = 8 + 6 * b;
          jacobian->block<2, 3>(row, col) =
              d_point * (-pose.rotation * skew(obs.board_points[j]));
          jacobian->block<2, 3>(row, col + 3) = d_point;
        }
        row += 2;
      }
    }
  };
  auto retract = [&](const State& s, const Eigen::VectorXd& delta) {
    State out = s;
    out.intr.fx += delta[0];
    out.intr.fy += delta[1];
    out.intr.cx += delta[2];
    out.intr.cy += delta[3];
    out.intr.k1 += delta[4];
    out.intr.k2 += delta[5];
    out.intr.k3 += delta[6];
    out.intr.k4 += delta[7];
    for (int b = 0; b < num_boards; ++b) {
      const int col = 8 + 6 * b;
      out.boards[b].rotation =
          out.boards[b].rotation * exp_so3(delta.segment<3>(col));
      out.boards[b].translation += delta.segment<3>(col + 3);
    }
    return out;
  };

  auto [fitted, report] =
      minimize_levenberg_marquardt(state, tangent_dim, eval, retract, settings);
  if (!report.converged) {
    throw NoConvergence("fit_intrinsics: optimizer hit the iteration cap");
  }
  fitted.intr.validate();

  IntrinsicsFitResult result;
  result.intrinsics = fitted.intr;
  result.board_poses = fitted.boards;
  result.rms_reprojection_px = std::sqrt(report.final_cost / (2.0 * total_points));
  result.report = report;
  return result;
}

// Relative pose of camera b with respect to camera a from ray pairs, by
// minimizing the symmetric epipolar plane residuals in both directions.
// A pure rotation (identical ray bundles) returns zero translation.
inline RelativePose estimate_pair_extrinsics(const PairCorrespondence& corr,
                                             const RelativePose& init,
                                             const LmSettings& settings = {}) {
  corr.validate();
  if (detail::direction_spread(corr.rays_a) < 1e-9 ||
      detail::direction_spread(corr.rays_b) < 1e-9) {
    throw DegenerateGeometry("estimate_pair_extrinsics: rays span too few directions");
  }

  std::vector<Vec3> a_vec, b_vec;
  a_vec.reserve(corr.rays_a.size());
  b_vec.reserve(corr.rays_b.size());
  for (const Ray3& r : corr.rays_a) a_vec.push_back(r.vec());
  for (const Ray3& r : corr.rays_b) b_vec.push_back(r.vec());

  const Mat3 r_kabsch = detail::kabsch_rotation(a_vec, b_vec);
  double max_angle = 0.0;
  for (std::size_t i = 0; i < a_vec.size(); ++i) {
    const double c = std::clamp(a_vec[i].dot(r_kabsch * b_vec[i]), -1.0, 1.0);
    max_angle = std::max(max_angle, std::acos(c));
  }
  if (max_angle < 1e-7) {
    return RelativePose{r_kabsch, Vec3::Zero()};
  }

  struct State {
    Mat3 rotation;
    Vec3 translation;  // unit
  };
  const int n = static_cast<int>(a_vec.size());
  auto eval = [&](const State& s, Eigen::VectorXd& residuals, Eigen::MatrixXd* jacobian) {
    residuals.resize(2 * n);
    if (jacobian) jacobian->setZero(2 * n, 5);
    const Eigen::Matrix<double, 3, 2> basis = detail::tangent_basis(s.translation);
    for (int k = 0; k < n; ++k) {
      const Vec3 rb = s.rotation * b_vec[k];
      const Mat3 d_rb_d_omega = -s.rotation * skew(b_vec[k]);
      const auto forward = detail::epipolar_plane_residual(a_vec[k], rb, s.translation);
      const auto backward = detail::epipolar_plane_residual(rb, a_vec[k], -s.translation);
      residuals[2 * k] = forward.value;
      residuals[2 * k + 1] = backward.value;
      if (jacobian) {
        jacobian->block<1, 3>(2 * k, 0) = forward.d_ray_b * d_rb_d_omega;
        jacobian->block<1, 2>(2 * k, 3) = forward.d_u * basis;
        jacobian->block<1, 3>(2 * k + 1, 0) = backward.d_ray_a * d_rb_d_omega;
        jacobian->block<1, 2>(2 * k + 1, 3) = backward.d_u * (-basis);
      }
    }
  };
  auto retract = [&](const State& s, const Eigen::VectorXd& delta) {
    State out;
    out.rotation = s.rotation * exp_so3(delta.segment<3>(0));
    const Eigen::Matrix<double, 3, 2> basis = detail::tangent_basis(s.translation);
    out.translation = (s.translation + basis * delta.segment<2>(3)).normalized();
    return out;
  };
  auto cost_of = [&](const State& s) {
    Eigen::VectorXd r;
    eval(s, r, nullptr);
    return r.squaredNorm();
  };

  // Initial translation direction: least epipolar residual over the unit
  // sphere for the chosen rotation (smallest eigenvector of the normal
  // cross-product scatter).
  auto translation_seed = [&](const Mat3& rotation) {
    Mat3 scatter = Mat3::Zero();
    for (int k = 0; k < n; ++k) {
      const Vec3 c = a_vec[k].cross(rotation * b_vec[k]);
      scatter += c * c.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
    return Vec3(eig.eigenvectors().col(0));
  };

  State seed_kabsch{r_kabsch, translation_seed(r_kabsch)};
  State seed_init{init.rotation, init.translation.norm() > 1e-9
                                     ? init.translation.normalized()
                                     : translation_seed(init.rotation)};
  State state = cost_of(seed_init) <= cost_of(seed_kabsch) ? seed_init : seed_kabsch;

  auto [fitted, report] = minimize_levenberg_marquardt(state, 5, eval, retract, settings);
  if (!report.converged) {
    throw NoConvergence("estimate_pair_extrinsics: optimizer hit the iteration cap");
  }

  // Resolve the sign of t so triangulated depths come out positive.
  int positive = 0, negative = 0;
  for (int k = 0; k < n; ++k) {
    const Vec3 rb = fitted.rotation * b_vec[k];
    const double dot_ab = a_vec[k].dot(rb);
    const double det = 1.0 - dot_ab * dot_ab;
    if (std::abs(det) < 1e-12) continue;
    const double pa = a_vec[k].dot(fitted.translation);
    const double pb = rb.dot(fitted.translation);
    const double depth_a = (pa - dot_ab * pb) / det;
    const double depth_b = (dot_ab * pa - pb) / det;
    if (depth_a > 0 && depth_b > 0) ++positive;
    if (depth_a < 0 && depth_b < 0) ++negative;
  }
  if (negative > positive) fitted.translation = -fitted.translation;

  return RelativePose{fitted.rotation, fitted.translation};
}

struct RigAssemblyResult {
  std::map<std::string, CameraExtrinsics> extrinsics;
  LmReport report;
};

// Global bundle adjustment of all camera poses {R_i, T_i} in the vehicle
// frame against (a) reprojection of the anchored boards and (b) the pairwise
// epipolar plane residuals taken in both directions with equal weight.
// Initialization: anchored cameras from their boards, rotations chained over
// the pair graph, translations from the (linear) coplanarity system.
inline RigAssemblyResult assemble_rig(const std::vector<PairCorrespondence>& pairs,
                                      const std::vector<AnchoredBoard>& anchors,
                                      const std::map<std::string, CameraIntrinsics>& intrinsics,
                                      const LmSettings& settings = {}) {
  if (anchors.empty()) {
    throw DisconnectedGraph("assemble_rig: at least one anchored board is required");
  }
  for (const auto& pair : pairs) pair.validate();
  for (const auto& anchor : anchors) anchor.observation.validate();

  // Index the cameras.
  std::vector<std::string> ids;
  auto intern = [&](const std::string& id) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] == id) return static_cast<int>(i);
    }
    ids.push_back(id);
    return static_cast<int>(ids.size() - 1);
  };
  for (const auto& pair : pairs) {
    intern(pair.camera_a);
    intern(pair.camera_b);
  }
  std::set<int> anchored;
  for (const auto& anchor : anchors) anchored.insert(intern(anchor.observation.camera_id));
  const int num_cams = static_cast<int>(ids.size());

  // Every camera must reach an anchored one through the pair graph.
  {
    std::vector<int> parent(num_cams);
    for (int i = 0; i < num_cams; ++i) parent[i] = i;
    std::function<int(int)> find = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const auto& pair : pairs) {
      parent[find(intern(pair.camera_a))] = find(intern(pair.camera_b));
    }
    std::set<int> anchored_roots;
    for (int cam : anchored) anchored_roots.insert(find(cam));
    for (int i = 0; i < num_cams; ++i) {
      if (!anchored_roots.count(find(i))) {
        throw DisconnectedGraph("assemble_rig: camera '" + ids[i] +
                                "' is not connected to any anchor");
      }
    }
  }

  // --- Initialization ---
  std::vector<RigidTransform> poses(num_cams);  // camera -> vehicle
  std::vector<bool> initialized(num_cams, false);
  for (const auto& anchor : anchors) {
    const int cam = intern(anchor.observation.camera_id);
    if (initialized[cam]) continue;
    const auto intr_it = intrinsics.find(anchor.observation.camera_id);
    if (intr_it == intrinsics.end()) {
      throw UnknownCamera("assemble_rig: no intrinsics for anchored camera '" +
                          anchor.observation.camera_id + "'");
    }
    std::vector<Vec3> rays;
    rays.reserve(anchor.observation.pixels.size());
    for (const Vec2& px : anchor.observation.pixels) {
      rays.push_back(fisheye_unproject(px, intr_it->second).vec());
    }
    const RigidTransform cam_from_board =
        detail::solve_pose_from_rays(anchor.observation.board_points, rays);
    poses[cam] = anchor.board_to_vehicle.compose(cam_from_board.inverse());
    initialized[cam] = true;
  }

  // Per-pair relative poses, then rotations chained outward from anchors.
  std::vector<RelativePose> relative(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    relative[p] = estimate_pair_extrinsics(pairs[p], RelativePose{}, settings);
  }
  bool progress = true;
  while (progress) {
    progress = false;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const int a = intern(pairs[p].camera_a);
      const int b = intern(pairs[p].camera_b);
      if (initialized[a] && !initialized[b]) {
        poses[b].rotation = poses[a].rotation * relative[p].rotation;
        initialized[b] = true;
        progress = true;
      } else if (initialized[b] && !initialized[a]) {
        poses[a].rotation = poses[b].rotation * relative[p].rotation.transpose();
        initialized[a] = true;
        progress = true;
      }
    }
  }

  // Translations of non-anchored cameras from the linear coplanarity system
  // c_k . (T_b - T_a) = 0 with the initial rotations fixed.
  {
    std::vector<int> free_index(num_cams, -1);
    int num_free = 0;
    for (int i = 0; i < num_cams; ++i) {
      if (!anchored.count(i)) free_index[i] = num_free++;
    }
    if (num_free > 0) {
      Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(3 * num_free, 3 * num_free);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(3 * num_free);
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const int a = intern(pairs[p].camera_a);
        const int b = intern(pairs[p].camera_b);
        for (std::size_t k = 0; k < pairs[p].rays_a.size(); ++k) {
          const Vec3 ra = poses[a].rotation * pairs[p].rays_a[k].vec();
          const Vec3 rb = poses[b].rotation * pairs[p].rays_b[k].vec();
          const Vec3 c = ra.cross(rb);
          // Row: c . T_b - c . T_a = 0
          Eigen::VectorXd row = Eigen::VectorXd::Zero(3 * num_free);
          double target = 0.0;
          if (free_index[b] >= 0) {
            row.segment<3>(3 * free_index[b]) += c;
          } else {
            target -= c.dot(poses[b].translation);
          }
          if (free_index[a] >= 0) {
            row.segment<3>(3 * free_index[a]) -= c;
          } else {
            target += c.dot(poses[a].translation);
          }
          normal += row * row.transpose();
          rhs += row * target;
        }
      }
      normal.diagonal().array() += 1e-12;
      const Eigen::VectorXd solution = normal.ldlt().solve(rhs);
      for (int i = 0; i < num_cams; ++i) {
        if (free_index[i] >= 0) {
          poses[i].translation = solution.segment<3>(3 * free_index[i]);
        }
      }
    }
  }

  // --- Joint refinement ---
  int num_residuals = 0;
  for (const auto& pair : pairs) num_residuals += 2 * static_cast<int>(pair.rays_a.size());
  for (const auto& anchor : anchors) {
    num_residuals += 2 * static_cast<int>(anchor.observation.pixels.size());
  }
  const int tangent_dim = 6 * num_cams;

  using State = std::vector<RigidTransform>;
  auto eval = [&](const State& s, Eigen::VectorXd& residuals, Eigen::MatrixXd* jacobian) {
    residuals.resize(num_residuals);
    if (jacobian) jacobian->setZero(num_residuals, tangent_dim);
    int row = 0;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const int a = intern(pairs[p].camera_a);
      const int b = intern(pairs[p].camera_b);
      const Vec3 u = s[b].translation - s[a].translation;
      for (std::size_t k = 0; k < pairs[p].rays_a.size(); ++k) {
        const Vec3 da = pairs[p].rays_a[k].vec();
        const Vec3 db = pairs[p].rays_b[k].vec();
        const Vec3 ra = s[a].rotation * da;
        const Vec3 rb = s[b].rotation * db;
        const auto forward = detail::epipolar_plane_residual(ra, rb, u);
        const auto backward = detail::epipolar_plane_residual(rb, ra, -u);
        residuals[row] = forward.value;
        residuals[row + 1] = backward.value;
        if (jacobian) {
          const Mat3 d_ra = -s[a].rotation * skew(da);
          const Mat3 d_rb = -s[b].rotation * skew(db);
          jacobian->block<1, 3>(row, 6 * a) = forward.d_ray_a * d_ra;
          jacobian->block<1, 3>(row, 6 * a + 3) = -forward.d_u;
          jacobian->block<1, 3>(row, 6 * b) = forward.d_ray_b * d_rb;
          jacobian->block<1, 3>(row, 6 * b + 3) = forward.d_u;
          jacobian->block<1, 3>(row + 1, 6 * a) = backward.d_ray_b * d_ra;
          jacobian->block<1, 3>(row + 1, 6 * a + 3) = backward.d_u;
          jacobian->block<1, 3>(row + 1, 6 * b) = backward.d_ray_a * d_rb;
          jacobian->block<1, 3>(row + 1, 6 * b + 3) = -backward.d_u;
        }
        row += 2;
      }
    }
    for (const auto& anchor : anchors) {
      const int cam = intern(anchor.observation.camera_id);
      const CameraIntrinsics& intr = intrinsics.at(anchor.observation.camera_id);
      for (std::size_t j = 0; j < anchor.observation.board_points.size(); ++j) {
        const Vec3 p_veh = anchor.board_to_vehicle.apply(anchor.observation.board_points[j]);
        const Vec3 p_cam = s[cam].rotation.transpose() * (p_veh - s[cam].translation);
        Eigen::Matrix<double, 2, 3> d_point;
        const Vec2 pixel = fisheye_project_with_jacobians(
            p_cam, intr, jacobian ? &d_point : nullptr, nullptr);
        residuals.segment<2>(row) = pixel - anchor.observation.pixels[j];
        if (jacobian) {
          jacobian->block<2, 3>(row, 6 * cam) = d_point * skew(p_cam);
          jacobian->block<2, 3>(row, 6 * cam + 3) =
              d_point * (-s[cam].rotation.transpose());
        }
        row += 2;
      }
    }
  };
  auto retract = [&](const State& s, const Eigen::VectorXd& delta) {
    State out = s;
    for (int i = 0; i < num_cams; ++i) {
      out[i].rotation = out[i].rotation * exp_so3(delta.segment<3>(6 * i));
      out[i].translation += delta.segment<3>(6 * i + 3);
    }
    return out;
  };

  auto [fitted, report] =
      minimize_levenberg_marquardt(poses, tangent_dim, eval, retract, settings);
  if (!report.converged) {
    throw NoConvergence("assemble_rig: optimizer hit the iteration cap");
  }

  RigAssemblyResult result;
  result.report = report;
  for (int i = 0; i < num_cams; ++i) {
    CameraExtrinsics ext;
    ext.rotation = fitted[i].rotation;
    ext.translation = fitted[i].translation;
    ext.validate();
    result.extrinsics[ids[i]] = ext;
  }
  return result;
}

}  // namespace bluelight

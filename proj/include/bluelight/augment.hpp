#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "bluelight/camera.hpp"
#include "bluelight/dataset_io.hpp"
#include "bluelight/errors.hpp"
#include "bluelight/image.hpp"
#include "bluelight/rng.hpp"

namespace bluelight {

// Defaults follow the training recipe: <10% coefficient jitter, rotations
// within +-15 degrees, perspective factor 1e-4, uniform scale in [0.8, 1.2].
struct AugmentConfig {
  CameraIntrinsics base_intrinsics;
  double jitter_fraction = 0.10;
  double rotation_deg_range = 15.0;
  double perspective_factor = 0.0001;
  double scale_min = 0.8, scale_max = 1.2;
  double brightness_delta = 0.1;   // additive, on normalized values
  double contrast_delta = 0.1;     // multiplicative band around 1
  double gaussian_noise_sigma = 0.01;
  std::uint64_t rng_seed = 0;

  void validate() const {
    base_intrinsics.validate();
    if (!(jitter_fraction >= 0.0 && jitter_fraction < 1.0)) {
      throw InvariantViolation("augment: jitter_fraction must lie in [0,1)");
    }
    if (!(scale_min > 0.0 && scale_min <= scale_max)) {
      throw InvariantViolation("augment: scale range must be positive and ordered");
    }
    if (rotation_deg_range < 0.0 || perspective_factor < 0.0 ||
        brightness_delta < 0.0 || contrast_delta < 0.0 || gaussian_noise_sigma < 0.0) {
      throw InvariantViolation("augment: perturbation magnitudes must be non-negative");
    }
  }
};

// Multiplies each radial coefficient by an independent uniform factor in
// [1-j, 1+j]; focal lengths and principal point are untouched. Retries up to
// 10 draws when the jittered polynomial fails monotonicity validation.
inline CameraIntrinsics jitter_coefficients(const CameraIntrinsics& intr,
                                            double jitter_fraction, Rng& rng) {
  if (!(jitter_fraction >= 0.0 && jitter_fraction < 1.0)) {
    throw InvariantViolation("jitter_coefficients: fraction must lie in [0,1)");
  }
  const double lo = 1.0 - jitter_fraction;
  const double hi = 1.0 + jitter_fraction;
  for (int attempt = 0; attempt < 10; ++attempt) {
    CameraIntrinsics jittered = intr;
    jittered.k1 = intr.k1 * rng.uniform(lo, hi);
    jittered.k2 = intr.k2 * rng.uniform(lo, hi);
    jittered.k3 = intr.k3 * rng.uniform(lo, hi);
    jittered.k4 = intr.k4 * rng.uniform(lo, hi);
    try {
      jittered.validate();
      return jittered;
    } catch (const MonotonicityViolation&) {
      // draw again
    }
  }
  throw MonotonicityViolation(
      "jitter_coefficients: no monotone coefficient set found in 10 draws");
}

// Forward map of one pixel from the undistorted (pinhole) source image into
// the fisheye-distorted destination, sharing fx, fy, cx, cy.
inline Vec2 distort_pixel(const Vec2& pixel, const CameraIntrinsics& src_pinhole,
                          const CameraIntrinsics& dst_fisheye) {
  const Ray3 ray = pinhole_unproject(pixel, src_pinhole);
  return fisheye_project(ray.vec(), dst_fisheye);
}

// Simulated lens distortion by inverse warping: every destination pixel is
// unprojected through the fisheye model, reprojected through the pinhole
// model with the same fx, fy, cx, cy, and bilinearly sampled. Destinations
// whose source falls outside the image are black.
inline ImageU8 distort_image(const ImageU8& img, const CameraIntrinsics& intr) {
  ImageU8 out(img.width(), img.height(), img.channels(), 0);
  std::vector<float> sample(img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      Vec2 src;
      try {
        const Ray3 ray = fisheye_unproject(Vec2(x, y), intr);
        src = pinhole_project(ray.vec(), intr.fx, intr.fy, intr.cx, intr.cy);
      } catch (const OutOfModelRange&) {
        continue;
      } catch (const BehindCamera&) {
        continue;
      }
      if (!bilinear_sample(img, src.x(), src.y(), sample.data())) continue;
      for (int c = 0; c < img.channels(); ++c) {
        out.at(x, y, c) = static_cast<std::uint8_t>(std::lround(
            std::clamp(sample[static_cast<std::size_t>(c)], 0.0f, 255.0f)));
      }
    }
  }
  return out;
}

namespace detail {

// Maps the 4 corners plus 4 edge midpoints; returns false when any of the
// points leaves the destination model's validated range.
inline bool distorted_sample_points(const LabeledBox& box, const CameraIntrinsics& src,
                                    const CameraIntrinsics& dst, int img_w, int img_h,
                                    std::array<Vec2, 8>* mapped) {
  const double x0 = box.x_min() * img_w;
  const double x1 = box.x_max() * img_w;
  const double y0 = box.y_min() * img_h;
  const double y1 = box.y_max() * img_h;
  const double xm = 0.5 * (x0 + x1);
  const double ym = 0.5 * (y0 + y1);
  const std::array<Vec2, 8> points = {Vec2(x0, y0), Vec2(x1, y0), Vec2(x1, y1),
                                      Vec2(x0, y1), Vec2(xm, y0), Vec2(x1, ym),
                                      Vec2(xm, y1), Vec2(x0, ym)};
  for (std::size_t i = 0; i < points.size(); ++i) {
    try {
      (*mapped)[i] = distort_pixel(points[i], src, dst);
    } catch (const OutOfModelRange&) {
      return false;
    } catch (const BehindCamera&) {
      return false;
    }
  }
  return true;
}

// Clips a pixel-space AABB back into a normalized box; empty when it leaves
// the image or collapses below one pixel on either side.
inline std::optional<LabeledBox> aabb_to_box(int class_id, double x0, double y0,
                                             double x1, double y1, int img_w,
                                             int img_h) {
  x0 = std::max(x0, 0.0);
  y0 = std::max(y0, 0.0);
  x1 = std::min(x1, static_cast<double>(img_w));
  y1 = std::min(y1, static_cast<double>(img_h));
  if (x1 - x0 < 1.0 || y1 - y0 < 1.0) return std::nullopt;
  LabeledBox box;
  box.class_id = class_id;
  box.cx = 0.5 * (x0 + x1) / img_w;
  box.cy = 0.5 * (y0 + y1) / img_h;
  box.w = (x1 - x0) / img_w;
  box.h = (y1 - y0) / img_h;
  return box;
}

}  // namespace detail

// Warps boxes through the simulated distortion. Box edges stay parallel: the
// corners and edge midpoints are distorted individually and closed into an
// axis-aligned bound (the midpoints bound the bow that radial distortion puts
// into straight edges). Boxes that collapse below one pixel are dropped.
inline std::vector<LabeledBox> distort_boxes(const std::vector<LabeledBox>& boxes,
                                             const CameraIntrinsics& src_pinhole,
                                             const CameraIntrinsics& dst_fisheye,
                                             int img_w, int img_h) {
  std::vector<LabeledBox> out;
  out.reserve(boxes.size());
  for (const LabeledBox& box : boxes) {
    std::array<Vec2, 8> mapped;
    if (!detail::distorted_sample_points(box, src_pinhole, dst_fisheye, img_w, img_h,
                                         &mapped)) {
      continue;
    }
    double x0 = mapped[0].x(), x1 = mapped[0].x();
    double y0 = mapped[0].y(), y1 = mapped[0].y();
    for (const Vec2& p : mapped) {
      x0 = std::min(x0, p.x());
      x1 = std::max(x1, p.x());
      y0 = std::min(y0, p.y());
      y1 = std::max(y1, p.y());
    }
    if (auto clipped = detail::aabb_to_box(box.class_id, x0, y0, x1, y1, img_w, img_h)) {
      out.push_back(*clipped);
    }
  }
  return out;
}

namespace detail {

using Homography = Eigen::Matrix3d;

inline Vec2 apply_homography(const Homography& h, const Vec2& p) {
  const Eigen::Vector3d q = h * Eigen::Vector3d(p.x(), p.y(), 1.0);
  return Vec2(q.x() / q.z(), q.y() / q.z());
}

inline std::optional<LabeledBox> map_box_corners(const LabeledBox& box,
                                                 const Homography& h, int img_w,
                                                 int img_h, bool clip) {
  const std::array<Vec2, 4> corners = {
      Vec2(box.x_min() * img_w, box.y_min() * img_h),
      Vec2(box.x_max() * img_w, box.y_min() * img_h),
      Vec2(box.x_max() * img_w, box.y_max() * img_h),
      Vec2(box.x_min() * img_w, box.y_max() * img_h)};
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const Vec2& c : corners) {
    const Vec2 p = apply_homography(h, c);
    x0 = std::min(x0, p.x());
    x1 = std::max(x1, p.x());
    y0 = std::min(y0, p.y());
    y1 = std::max(y1, p.y());
  }
  if (!clip) {
    LabeledBox out = box;
    out.cx = 0.5 * (x0 + x1) / img_w;
    out.cy = 0.5 * (y0 + y1) / img_h;
    out.w = (x1 - x0) / img_w;
    out.h = (y1 - y0) / img_h;
    return out;
  }
  return aabb_to_box(box.class_id, x0, y0, x1, y1, img_w, img_h);
}

}  // namespace detail

struct PhotometricDraws {
  double rotation_deg = 0.0;
  double perspective_x = 0.0, perspective_y = 0.0;
  double scale = 1.0;
  double brightness = 0.0;
  double contrast = 1.0;
};

// Applies the secondary perturbations in a fixed order: rotation (boxes take
// the axis-aligned bound of their rotated corners), perspective jitter,
// uniform scale, brightness/contrast, Gaussian noise. The three geometric
// steps share one composed warp so the image is resampled once; noise comes
// last so it is never warped. Deterministic for a fixed rng state.
inline std::pair<ImageU8, std::vector<LabeledBox>> photometric_geometric_augment(
    const ImageU8& img, const std::vector<LabeledBox>& boxes, const AugmentConfig& cfg,
    Rng& rng, PhotometricDraws* draws_out = nullptr) {
  cfg.validate();
  const int w = img.width(), h = img.height();
  const double cx = (w - 1) / 2.0;
  const double cy = (h - 1) / 2.0;

  PhotometricDraws draws;
  draws.rotation_deg = rng.uniform(-cfg.rotation_deg_range, cfg.rotation_deg_range);
  draws.perspective_x = rng.uniform(-cfg.perspective_factor, cfg.perspective_factor);
  draws.perspective_y = rng.uniform(-cfg.perspective_factor, cfg.perspective_factor);
  draws.scale = rng.uniform(cfg.scale_min, cfg.scale_max);
  draws.brightness = rng.uniform(-cfg.brightness_delta, cfg.brightness_delta);
  draws.contrast = rng.uniform(1.0 - cfg.contrast_delta, 1.0 + cfg.contrast_delta);
  if (draws_out) *draws_out = draws;

  detail::Homography center = detail::Homography::Identity();
  center(0, 2) = -cx;
  center(1, 2) = -cy;
  detail::Homography uncenter = detail::Homography::Identity();
  uncenter(0, 2) = cx;
  uncenter(1, 2) = cy;

  const double alpha = deg_to_rad(draws.rotation_deg);
  detail::Homography rot = detail::Homography::Identity();
  rot(0, 0) = std::cos(alpha);
  rot(0, 1) = -std::sin(alpha);
  rot(1, 0) = std::sin(alpha);
  rot(1, 1) = std::cos(alpha);
  const detail::Homography rotation = uncenter * rot * center;

  detail::Homography persp = detail::Homography::Identity();
  persp(2, 0) = draws.perspective_x;
  persp(2, 1) = draws.perspective_y;
  const detail::Homography perspective = uncenter * persp * center;

  detail::Homography sc = detail::Homography::Identity();
  sc(0, 0) = draws.scale;
  sc(1, 1) = draws.scale;
  const detail::Homography scale = uncenter * sc * center;

  // Boxes re-close to an axis-aligned bound after each geometric step.
  std::vector<LabeledBox> out_boxes;
  out_boxes.reserve(boxes.size());
  for (const LabeledBox& box : boxes) {
    auto rotated = detail::map_box_corners(box, rotation, w, h, false);
    if (!rotated) continue;
    auto skewed = detail::map_box_corners(*rotated, perspective, w, h, false);
    if (!skewed) continue;
    auto scaled = detail::map_box_corners(*skewed, scale, w, h, true);
    if (!scaled) continue;
    out_boxes.push_back(*scaled);
  }

  const detail::Homography forward = scale * perspective * rotation;
  const detail::Homography backward = forward.inverse();

  ImageF warped(w, h, img.channels(), 0.0f);
  std::vector<float> sample(img.channels());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Vec2 src = detail::apply_homography(backward, Vec2(x, y));
      if (!bilinear_sample(img, src.x(), src.y(), sample.data())) continue;
      for (int c = 0; c < img.channels(); ++c) {
        warped.at(x, y, c) = sample[static_cast<std::size_t>(c)] / 255.0f;
      }
    }
  }

  if (draws.contrast != 1.0 || draws.brightness != 0.0) {
    float* data = warped.data();
    for (std::size_t i = 0; i < warped.size(); ++i) {
      data[i] = static_cast<float>(draws.contrast * (data[i] - 0.5) + 0.5 +
                                   draws.brightness);
    }
  }
  if (cfg.gaussian_noise_sigma > 0.0) {
    float* data = warped.data();
    for (std::size_t i = 0; i < warped.size(); ++i) {
      data[i] += static_cast<float>(rng.normal(0.0, cfg.gaussian_noise_sigma));
    }
  }

  ImageU8 out(w, h, img.channels());
  const float* src = warped.data();
  std::uint8_t* dst = out.data();
  for (std::size_t i = 0; i < warped.size(); ++i) dst[i] = to_u8(src[i]);
  return {std::move(out), std::move(out_boxes)};
}

}  // namespace bluelight

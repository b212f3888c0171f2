#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bluelight/camera.hpp"
#include "bluelight/errors.hpp"
#include "bluelight/geometry.hpp"
#include "bluelight/text_config.hpp"

namespace bluelight {

// Axis-aligned box in YOLO convention: center and size normalized to [0,1]
// relative to the image dimensions.
struct LabeledBox {
  int class_id = 0;
  double cx = 0.0, cy = 0.0, w = 0.0, h = 0.0;

  void validate() const {
    constexpr double slack = 1e-9;
    if (class_id < 0) throw OutOfRange("box: class id must be non-negative");
    if (!(cx >= 0.0 && cx <= 1.0 && cy >= 0.0 && cy <= 1.0)) {
      throw OutOfRange("box: center outside [0,1]");
    }
    if (!(w > 0.0 && w <= 1.0 && h > 0.0 && h <= 1.0)) {
      throw OutOfRange("box: size outside (0,1]");
    }
    if (cx - w / 2 < -slack || cx + w / 2 > 1.0 + slack ||
        cy - h / 2 < -slack || cy + h / 2 > 1.0 + slack) {
      throw OutOfRange("box: exceeds image bounds");
    }
  }

  double x_min() const { return cx - w / 2; }
  double x_max() const { return cx + w / 2; }
  double y_min() const { return cy - h / 2; }
  double y_max() const { return cy + h / 2; }
  double area() const { return w * h; }
};

struct Detection {
  LabeledBox box;
  double confidence = 0.0;

  void validate() const {
    box.validate();
    if (!(confidence >= 0.0 && confidence <= 1.0)) {
      throw OutOfRange("detection: confidence outside [0,1]");
    }
  }
};

// Row-aligned vehicle grouping for a label file: equal ids mean the
// annotations belong to the same vehicle.
struct VehicleGrouping {
  std::vector<int> ids;
};

struct RigCamera {
  std::string camera_id;
  CameraIntrinsics intrinsics;
  CameraExtrinsics extrinsics;
  double nominal_yaw_deg = 0.0;
};

struct RigConfig {
  std::vector<RigCamera> cameras;

  const RigCamera* find(const std::string& id) const {
    for (const auto& cam : cameras) {
      if (cam.camera_id == id) return &cam;
    }
    return nullptr;
  }

  const RigCamera& require(const std::string& id) const {
    const RigCamera* cam = find(id);
    if (!cam) throw UnknownCamera("rig has no camera '" + id + "'");
    return *cam;
  }

  void validate() const {
    if (cameras.empty() || cameras.size() > 8) {
      throw InvariantViolation("rig: camera count must be in [1, 8]");
    }
    std::set<std::string> ids;
    for (const auto& cam : cameras) {
      if (!ids.insert(cam.camera_id).second) {
        throw InvariantViolation("rig: duplicate camera id '" + cam.camera_id + "'");
      }
      cam.intrinsics.validate();
      cam.extrinsics.validate();
    }
  }
};

namespace detail {

inline std::vector<std::vector<std::string>> read_token_lines(
    const std::filesystem::path& path, std::vector<int>* line_numbers = nullptr) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<std::string>> lines;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto tokens = split_ws(trim(raw));
    if (tokens.empty()) continue;
    lines.push_back(std::move(tokens));
    if (line_numbers) line_numbers->push_back(line_no);
  }
  return lines;
}

inline LabeledBox parse_box_fields(const std::filesystem::path& path, int line,
                                   const std::vector<std::string>& tokens) {
  long cls = 0;
  double vals[4];
  if (!parse_long(tokens[0], cls)) {
    throw ParseError(path.string(), line, "class id is not an integer");
  }
  for (int i = 0; i < 4; ++i) {
    if (!parse_double(tokens[i + 1], vals[i])) {
      throw ParseError(path.string(), line, "field " + std::to_string(i + 2) +
                                                " is not a number");
    }
  }
  LabeledBox box{static_cast<int>(cls), vals[0], vals[1], vals[2], vals[3]};
  try {
    box.validate();
  } catch (const OutOfRange& e) {
    throw OutOfRange(path.string() + ":" + std::to_string(line) + ": " + e.what());
  }
  return box;
}

inline std::string format_fixed(double v, int decimals = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

// Shortest representation that round-trips the double exactly.
inline std::string format_exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

// Label file: one `class cx cy w h` row per box.
inline std::vector<LabeledBox> read_labels(const std::filesystem::path& path) {
  std::vector<int> line_numbers;
  const auto lines = detail::read_token_lines(path, &line_numbers);
  std::vector<LabeledBox> boxes;
  boxes.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].size() != 5) {
      throw ParseError(path.string(), line_numbers[i], "expected 5 fields, got " +
                                                           std::to_string(lines[i].size()));
    }
    boxes.push_back(detail::parse_box_fields(path, line_numbers[i], lines[i]));
  }
  return boxes;
}

inline void write_labels(const std::vector<LabeledBox>& boxes,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& b : boxes) {
    out << b.class_id << ' ' << detail::format_fixed(b.cx) << ' '
        << detail::format_fixed(b.cy) << ' ' << detail::format_fixed(b.w) << ' '
        << detail::format_fixed(b.h) << '\n';
  }
  if (!out) throw IoError("short write to " + path.string());
}

// Detection file: label row plus a trailing confidence column.
inline std::vector<Detection> read_detections(const std::filesystem::path& path) {
  std::vector<int> line_numbers;
  const auto lines = detail::read_token_lines(path, &line_numbers);
  std::vector<Detection> detections;
  detections.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].size() != 6) {
      throw ParseError(path.string(), line_numbers[i], "expected 6 fields, got " +
                                                           std::to_string(lines[i].size()));
    }
    Detection det;
    det.box = detail::parse_box_fields(path, line_numbers[i], lines[i]);
    if (!detail::parse_double(lines[i][5], det.confidence)) {
      throw ParseError(path.string(), line_numbers[i], "confidence is not a number");
    }
    if (!(det.confidence >= 0.0 && det.confidence <= 1.0)) {
      throw OutOfRange(path.string() + ":" + std::to_string(line_numbers[i]) +
                       ": confidence outside [0,1]");
    }
    detections.push_back(det);
  }
  return detections;
}

inline void write_detections(const std::vector<Detection>& detections,
                             const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& d : detections) {
    out << d.box.class_id << ' ' << detail::format_fixed(d.box.cx) << ' '
        << detail::format_fixed(d.box.cy) << ' ' << detail::format_fixed(d.box.w) << ' '
        << detail::format_fixed(d.box.h) << ' ' << detail::format_fixed(d.confidence)
        << '\n';
  }
  if (!out) throw IoError("short write to " + path.string());
}

// Vehicle-id sidecar: one non-negative integer per line, row-aligned with
// the paired label file.
inline VehicleGrouping read_vehicle_ids(const std::filesystem::path& path,
                                        std::size_t expected_len) {
  std::vector<int> line_numbers;
  const auto lines = detail::read_token_lines(path, &line_numbers);
  VehicleGrouping grouping;
  grouping.ids.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].size() != 1) {
      throw ParseError(path.string(), line_numbers[i], "expected a single integer");
    }
    long id = 0;
    if (!detail::parse_long(lines[i][0], id)) {
      throw ParseError(path.string(), line_numbers[i], "vehicle id is not an integer");
    }
    if (id < 0) {
      throw OutOfRange(path.string() + ":" + std::to_string(line_numbers[i]) +
                       ": vehicle id must be non-negative");
    }
    grouping.ids.push_back(static_cast<int>(id));
  }
  if (grouping.ids.size() != expected_len) {
    throw LengthMismatch(path.string() + ": has " + std::to_string(grouping.ids.size()) +
                         " rows, paired label file has " + std::to_string(expected_len));
  }
  return grouping;
}

inline void write_vehicle_ids(const VehicleGrouping& grouping,
                              const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (int id : grouping.ids) out << id << '\n';
  if (!out) throw IoError("short write to " + path.string());
}

namespace detail {

inline CameraIntrinsics intrinsics_from_section(const std::string& path,
                                                const ConfigSection& s) {
  CameraIntrinsics intr;
  intr.fx = s.number(path, "fx");
  intr.fy = s.number(path, "fy");
  intr.cx = s.number(path, "cx");
  intr.cy = s.number(path, "cy");
  intr.k1 = s.number(path, "k1");
  intr.k2 = s.number(path, "k2");
  intr.k3 = s.number(path, "k3");
  intr.k4 = s.number(path, "k4");
  intr.width = static_cast<int>(s.number(path, "width"));
  intr.height = static_cast<int>(s.number(path, "height"));
  intr.max_theta = deg_to_rad(s.number_or(path, "max_theta_deg", kDefaultMaxThetaDeg));
  intr.validate();
  return intr;
}

inline void write_intrinsics_keys(std::ostream& out, const CameraIntrinsics& intr) {
  out << "fx = " << format_exact(intr.fx) << '\n'
      << "fy = " << format_exact(intr.fy) << '\n'
      << "cx = " << format_exact(intr.cx) << '\n'
      << "cy = " << format_exact(intr.cy) << '\n'
      << "k1 = " << format_exact(intr.k1) << '\n'
      << "k2 = " << format_exact(intr.k2) << '\n'
      << "k3 = " << format_exact(intr.k3) << '\n'
      << "k4 = " << format_exact(intr.k4) << '\n'
      << "width = " << intr.width << '\n'
      << "height = " << intr.height << '\n'
      << "max_theta_deg = " << format_exact(rad_to_deg(intr.max_theta)) << '\n';
}

}  // namespace detail

// Rig configuration: one `[camera ID]` section per camera carrying the
// intrinsics keys plus a unit quaternion (w x y z, camera-to-vehicle) and
// translation in meters. Quaternions off unit norm by more than 1e-4 are
// rejected; smaller drift is renormalized.
inline RigConfig read_rig_config(const std::filesystem::path& path) {
  const auto sections = detail::read_sections(path);
  RigConfig rig;
  for (const auto& s : sections) {
    if (s.header[0] != "camera" || s.header.size() != 2) {
      throw SchemaError(path.string() + ":" + std::to_string(s.header_line) +
                        ": expected section [camera <id>]");
    }
    RigCamera cam;
    cam.camera_id = s.header[1];
    cam.intrinsics = detail::intrinsics_from_section(path.string(), s);
    const double qw = s.number(path.string(), "q_w");
    const double qx = s.number(path.string(), "q_x");
    const double qy = s.number(path.string(), "q_y");
    const double qz = s.number(path.string(), "q_z");
    const double norm = std::sqrt(qw * qw + qx * qx + qy * qy + qz * qz);
    if (std::abs(norm - 1.0) > 1e-4) {
      throw InvariantViolation(path.string() + ": camera '" + cam.camera_id +
                               "' quaternion norm " + std::to_string(norm) +
                               " too far from 1");
    }
    cam.extrinsics.rotation = quaternion_to_rotation(qw, qx, qy, qz);
    cam.extrinsics.translation =
        Vec3(s.number(path.string(), "t_x"), s.number(path.string(), "t_y"),
             s.number(path.string(), "t_z"));
    cam.nominal_yaw_deg = s.number_or(path.string(), "nominal_yaw_deg", 0.0);
    rig.cameras.push_back(std::move(cam));
  }
  rig.validate();
  return rig;
}

inline void write_rig_config(const RigConfig& rig, const std::filesystem::path& path) {
  rig.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& cam : rig.cameras) {
    out << "[camera " << cam.camera_id << "]\n";
    detail::write_intrinsics_keys(out, cam.intrinsics);
    const Eigen::Vector4d q = rotation_to_quaternion(cam.extrinsics.rotation);
    out << "q_w = " << detail::format_exact(q[0]) << '\n'
        << "q_x = " << detail::format_exact(q[1]) << '\n'
        << "q_y = " << detail::format_exact(q[2]) << '\n'
        << "q_z = " << detail::format_exact(q[3]) << '\n'
        << "t_x = " << detail::format_exact(cam.extrinsics.translation.x()) << '\n'
        << "t_y = " << detail::format_exact(cam.extrinsics.translation.y()) << '\n'
        << "t_z = " << detail::format_exact(cam.extrinsics.translation.z()) << '\n'
        << "nominal_yaw_deg = " << detail::format_exact(cam.nominal_yaw_deg) << '\n'
        << '\n';
  }
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace bluelight

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "bluelight/errors.hpp"
#include "bluelight/image.hpp"
#include "bluelight/text_config.hpp"

namespace bluelight {

// Closed HSV interval. Hue is in degrees and may wrap across 360 (h_min >
// h_max selects the range through 0).
struct HsvRange {
  double h_min = 0.0, h_max = 0.0;
  double s_min = 0.0, s_max = 1.0;
  double v_min = 0.0, v_max = 1.0;

  void validate() const {
    if (!(h_min >= 0.0 && h_min < 360.0 && h_max >= 0.0 && h_max < 360.0)) {
      throw InvariantViolation("hsv range: hue bounds must lie in [0,360)");
    }
    if (!(s_min <= s_max) || !(v_min <= v_max)) {
      throw InvariantViolation("hsv range: min must not exceed max");
    }
    if (s_min < 0.0 || s_max > 1.0 || v_min < 0.0 || v_max > 1.0) {
      throw InvariantViolation("hsv range: saturation/value bounds must lie in [0,1]");
    }
  }

  bool contains(double h, double s, double v) const {
    if (s < s_min || s > s_max || v < v_min || v > v_max) return false;
    if (h_min <= h_max) return h >= h_min && h <= h_max;
    return h >= h_min || h <= h_max;  // wraps through 360
  }
};

// The two chromatic ranges of the attention block: saturated blues plus
// high-luminance whites with a blue cast. The defaults are centered on hue
// 240 and are meant to be tuned per deployment.
struct AttentionConfig {
  HsvRange blue{200.0, 260.0, 0.45, 1.0, 0.30, 1.0};
  HsvRange bluish_white{180.0, 280.0, 0.03, 0.40, 0.85, 1.0};
  bool clamp_output = true;

  void validate() const {
    blue.validate();
    bluish_white.validate();
  }
};

// Hexcone RGB -> HSV on a normalized 3-channel image. Output channels are
// (H in degrees [0,360), S in [0,1], V in [0,1]); H is 0 where S is 0.
inline ImageF rgb_to_hsv(const ImageF& rgb) {
  if (rgb.channels() != 3) {
    throw InvariantViolation("rgb_to_hsv: expected a 3-channel image");
  }
  ImageF hsv(rgb.width(), rgb.height(), 3);
  const float* src = rgb.data();
  float* dst = hsv.data();
  const std::size_t pixels = rgb.size() / 3;
  for (std::size_t i = 0; i < pixels; ++i) {
    const float r = src[3 * i], g = src[3 * i + 1], b = src[3 * i + 2];
    const float max_c = std::max({r, g, b});
    const float min_c = std::min({r, g, b});
    const float delta = max_c - min_c;
    float h = 0.0f;
    if (delta > 0.0f) {
      if (max_c == r) {
        h = 60.0f * ((g - b) / delta);
      } else if (max_c == g) {
        h = 60.0f * ((b - r) / delta + 2.0f);
      } else {
        h = 60.0f * ((r - g) / delta + 4.0f);
      }
      if (h < 0.0f) h += 360.0f;
      if (h >= 360.0f) h -= 360.0f;
    }
    const float s = max_c > 0.0f ? delta / max_c : 0.0f;
    dst[3 * i] = h;
    dst[3 * i + 1] = s;
    dst[3 * i + 2] = max_c;
  }
  return hsv;
}

// Union of the two chromatic masks: 1 where the pixel falls in either range.
inline ImageU8 build_mask(const ImageF& hsv, const AttentionConfig& cfg) {
  if (hsv.channels() != 3) {
    throw InvariantViolation("build_mask: expected a 3-channel HSV image");
  }
  cfg.validate();
  ImageU8 mask(hsv.width(), hsv.height(), 1);
  const float* src = hsv.data();
  std::uint8_t* dst = mask.data();
  const std::size_t pixels = hsv.size() / 3;
  for (std::size_t i = 0; i < pixels; ++i) {
    const double h = src[3 * i], s = src[3 * i + 1], v = src[3 * i + 2];
    dst[i] = (cfg.blue.contains(h, s, v) || cfg.bluish_white.contains(h, s, v)) ? 1 : 0;
  }
  return mask;
}

// Residual chromatic enhancement: out = x + x * mask, applied per channel.
// Unmasked pixels pass through bit-exact; masked ones double (clamped to 1
// when clamp_output is set, preserving the normalized-image contract).
inline ImageF apply_attention(const ImageF& img, const AttentionConfig& cfg) {
  if (img.channels() != 3) {
    throw InvariantViolation("apply_attention: expected a 3-channel image");
  }
  const ImageU8 mask = build_mask(rgb_to_hsv(img), cfg);
  ImageF out(img.width(), img.height(), 3);
  const float* src = img.data();
  const std::uint8_t* m = mask.data();
  float* dst = out.data();
  const std::size_t pixels = img.size() / 3;
  for (std::size_t i = 0; i < pixels; ++i) {
    for (int c = 0; c < 3; ++c) {
      float v = src[3 * i + c];
      if (m[i]) {
        v += v;
        if (cfg.clamp_output && v > 1.0f) v = 1.0f;
      }
      dst[3 * i + c] = v;
    }
  }
  return out;
}

// Attention config file: `[range blue]` and `[range bluish_white]` sections
// with h_min/h_max/s_min/s_max/v_min/v_max keys, plus an optional
// `[options]` section with clamp_output = 0|1.
inline AttentionConfig read_attention_config(const std::filesystem::path& path) {
  const auto sections = detail::read_sections(path);
  AttentionConfig cfg;
  bool saw_blue = false, saw_white = false;
  for (const auto& s : sections) {
    if (s.header[0] == "range" && s.header.size() == 2) {
      HsvRange range;
      range.h_min = s.number(path.string(), "h_min");
      range.h_max = s.number(path.string(), "h_max");
      range.s_min = s.number(path.string(), "s_min");
      range.s_max = s.number(path.string(), "s_max");
      range.v_min = s.number(path.string(), "v_min");
      range.v_max = s.number(path.string(), "v_max");
      if (s.header[1] == "blue") {
        cfg.blue = range;
        saw_blue = true;
      } else if (s.header[1] == "bluish_white") {
        cfg.bluish_white = range;
        saw_white = true;
      } else {
        throw SchemaError(path.string() + ": unknown range '" + s.header[1] + "'");
      }
    } else if (s.header[0] == "options" && s.header.size() == 1) {
      cfg.clamp_output = s.number_or(path.string(), "clamp_output", 1.0) != 0.0;
    } else {
      throw SchemaError(path.string() + ":" + std::to_string(s.header_line) +
                        ": expected [range blue], [range bluish_white] or [options]");
    }
  }
  if (!saw_blue || !saw_white) {
    throw SchemaError(path.string() + ": both [range blue] and [range bluish_white] required");
  }
  cfg.validate();
  return cfg;
}

}  // namespace bluelight

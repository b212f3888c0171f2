#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "bluelight/errors.hpp"

namespace bluelight {

// Row-major, channel-interleaved pixel grid.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, T fill = T{})
      : width_(width), height_(height), channels_(channels),
        data_(static_cast<std::size_t>(width) * height * channels, fill) {
    if (width <= 0 || height <= 0 || channels <= 0) {
      throw InvariantViolation("Image: dimensions must be positive");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }

  T& at(int x, int y, int c = 0) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  const T& at(int x, int y, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::size_t size() const { return data_.size(); }

  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_ &&
           channels_ == other.channels_;
  }

  friend bool operator==(const Image& a, const Image& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ &&
           a.channels_ == b.channels_ && a.data_ == b.data_;
  }

 private:
  int width_ = 0, height_ = 0, channels_ = 0;
  std::vector<T> data_;
};

using ImageU8 = Image<std::uint8_t>;
using ImageF = Image<float>;

// Bilinear sample at (x, y) with pixel centers on the integer lattice.
// Returns false when the sample point falls outside [0, w-1] x [0, h-1];
// `out` must hold img.channels() floats.
template <typename T>
inline bool bilinear_sample(const Image<T>& img, double x, double y, float* out) {
  if (!(x >= 0.0) || !(y >= 0.0) || x > img.width() - 1 || y > img.height() - 1) {
    return false;
  }
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double ax = x - x0;
  const double ay = y - y0;
  for (int c = 0; c < img.channels(); ++c) {
    const double top = (1.0 - ax) * img.at(x0, y0, c) + ax * img.at(x1, y0, c);
    const double bottom = (1.0 - ax) * img.at(x0, y1, c) + ax * img.at(x1, y1, c);
    out[c] = static_cast<float>((1.0 - ay) * top + ay * bottom);
  }
  return true;
}

inline std::uint8_t to_u8(float v) {
  const float scaled = v * 255.0f;
  if (scaled <= 0.0f) return 0;
  if (scaled >= 255.0f) return 255;
  return static_cast<std::uint8_t>(std::lround(scaled));
}

// [0,255] bytes to normalized floats.
inline ImageF normalize(const ImageU8& img) {
  ImageF out(img.width(), img.height(), img.channels());
  const std::uint8_t* src = img.data();
  float* dst = out.data();
  for (std::size_t i = 0; i < img.size(); ++i) dst[i] = src[i] / 255.0f;
  return out;
}

inline ImageU8 denormalize(const ImageF& img) {
  ImageU8 out(img.width(), img.height(), img.channels());
  const float* src = img.data();
  std::uint8_t* dst = out.data();
  for (std::size_t i = 0; i < img.size(); ++i) dst[i] = to_u8(src[i]);
  return out;
}

}  // namespace bluelight

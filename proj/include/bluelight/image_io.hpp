#pragma once

#include <png.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include "bluelight/errors.hpp"
#include "bluelight/image.hpp"

namespace bluelight {

namespace detail {

inline int ppm_next_token(std::istream& in, std::string& token) {
  token.clear();
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (std::isspace(ch)) {
      ch = in.get();
    } else {
      break;
    }
  }
  while (ch != EOF && !std::isspace(ch)) {
    token.push_back(static_cast<char>(ch));
    ch = in.get();
  }
  return token.empty() ? EOF : 0;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

}  // namespace detail

// Binary PPM (P6, RGB) and PGM (P5, gray), 8-bit only.
inline ImageU8 read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic, w_str, h_str, max_str;
  if (detail::ppm_next_token(in, magic) || (magic != "P6" && magic != "P5")) {
    throw ParseError(path.string() + ": not a binary PPM/PGM file");
  }
  if (detail::ppm_next_token(in, w_str) || detail::ppm_next_token(in, h_str) ||
      detail::ppm_next_token(in, max_str)) {
    throw ParseError(path.string() + ": truncated header");
  }
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(w_str);
    height = std::stoi(h_str);
    maxval = std::stoi(max_str);
  } catch (const std::exception&) {
    throw ParseError(path.string() + ": malformed header");
  }
  if (width <= 0 || height <= 0 || maxval != 255) {
    throw ParseError(path.string() + ": unsupported dimensions or depth");
  }
  const int channels = magic == "P6" ? 3 : 1;
  ImageU8 img(width, height, channels);
  in.read(reinterpret_cast<char*>(img.data()), static_cast<std::streamsize>(img.size()));
  if (static_cast<std::size_t>(in.gcount()) != img.size()) {
    throw ParseError(path.string() + ": truncated pixel data");
  }
  return img;
}

inline void write_ppm(const ImageU8& img, const std::filesystem::path& path) {
  if (img.channels() != 3 && img.channels() != 1) {
    throw InvariantViolation("write_ppm: only 1- or 3-channel images");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << (img.channels() == 3 ? "P6" : "P5") << "\n"
      << img.width() << " " << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data()),
            static_cast<std::streamsize>(img.size()));
  if (!out) throw IoError("short write to " + path.string());
}

inline ImageU8 read_png(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, detail::FileCloser> fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng: read struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng: info struct allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError(path.string() + ": PNG decode failed");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const png_byte color_type = png_get_color_type(png, info);
  const png_byte bit_depth = png_get_bit_depth(png, info);

  // Normalize everything to 8-bit RGB or gray.
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError(path.string() + ": unsupported PNG channel layout");
  }
  ImageU8 img(static_cast<int>(width), static_cast<int>(height), channels);
  std::vector<png_bytep> rows(height);
  for (png_uint_32 y = 0; y < height; ++y) {
    rows[y] = img.data() + static_cast<std::size_t>(y) * width * channels;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

inline void write_png(const ImageU8& img, const std::filesystem::path& path) {
  if (img.channels() != 3 && img.channels() != 1) {
    throw InvariantViolation("write_png: only 1- or 3-channel images");
  }
  std::unique_ptr<std::FILE, detail::FileCloser> fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw IoError("cannot write " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng: write struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng: info struct allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(path.string() + ": PNG encode failed");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width(), img.height(), 8,
               img.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(img.height());
  for (int y = 0; y < img.height(); ++y) {
    rows[y] = const_cast<png_bytep>(img.data()) +
              static_cast<std::size_t>(y) * img.width() * img.channels();
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Dispatch by extension: .png, .ppm, .pgm.
inline ImageU8 read_image(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".png") return read_png(path);
  if (ext == ".ppm" || ext == ".pgm") return read_ppm(path);
  throw IoError("unsupported image extension: " + path.string());
}

inline void write_image(const ImageU8& img, const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".png") return write_png(img, path);
  if (ext == ".ppm" || ext == ".pgm") return write_ppm(img, path);
  throw IoError("unsupported image extension: " + path.string());
}

}  // namespace bluelight

#include "ttdsr/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>

#include "ttdsr/data.hpp"

namespace ttdsr {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::string& path, const char* what) {
  throw std::runtime_error("image_io: " + std::string(what) + ": " + path);
}

LoadedImage load_png(const std::string& path, std::FILE* f) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(path, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(path, "png_create_info_struct failed");
  }
  std::vector<unsigned char> interleaved;
  int channels = 0, width = 0, height = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "corrupt PNG");
  }
  png_init_io(png, f);
  png_read_info(png, info);

  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);

  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  channels = static_cast<int>(png_get_channels(png, info));
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "unsupported PNG channel layout");
  }
  interleaved.resize(static_cast<size_t>(height) * width * channels);
  std::vector<png_bytep> rows(static_cast<size_t>(height));
  for (int y = 0; y < height; ++y) {
    rows[y] = interleaved.data() + static_cast<size_t>(y) * width * channels;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  LoadedImage out;
  if (channels == 1) {
    out.is_gray = true;
    out.gray = ImagePlane(height, width, kByteRange);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        out.gray.at(y, x) = interleaved[static_cast<size_t>(y) * width + x];
      }
    }
  } else {
    out.rgb.height = height;
    out.rgb.width = width;
    out.rgb.rgb = std::move(interleaved);
  }
  return out;
}

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

// Uncompressed 24/32-bit BI_RGB and 8-bit grayscale-palette BMP files.
LoadedImage load_bmp(const std::string& path, std::FILE* f) {
  unsigned char header[54];
  if (std::fread(header, 1, sizeof header, f) != sizeof header) fail(path, "short BMP header");
  if (header[0] != 'B' || header[1] != 'M') fail(path, "not a BMP file");
  const std::uint32_t data_offset = le32(header + 10);
  const std::uint32_t dib_size = le32(header + 14);
  if (dib_size < 40) fail(path, "unsupported BMP header");
  const std::int32_t width = static_cast<std::int32_t>(le32(header + 18));
  std::int32_t height = static_cast<std::int32_t>(le32(header + 22));
  const bool bottom_up = height > 0;
  if (!bottom_up) height = -height;
  const std::uint16_t bpp = le16(header + 28);
  const std::uint32_t compression = le32(header + 30);
  if (compression != 0) fail(path, "compressed BMP is not supported");
  if (width <= 0 || height <= 0) fail(path, "bad BMP dimensions");

  std::vector<unsigned char> palette;
  if (bpp == 8) {
    const std::uint32_t colors_declared = le32(header + 46);
    const std::uint32_t colors = colors_declared ? colors_declared : 256;
    palette.resize(static_cast<size_t>(colors) * 4);
    if (std::fseek(f, static_cast<long>(14 + dib_size), SEEK_SET) != 0 ||
        std::fread(palette.data(), 1, palette.size(), f) != palette.size()) {
      fail(path, "short BMP palette");
    }
  } else if (bpp != 24 && bpp != 32) {
    fail(path, "unsupported BMP bit depth");
  }

  if (std::fseek(f, static_cast<long>(data_offset), SEEK_SET) != 0) fail(path, "bad BMP offset");
  const int bytes_per_px = bpp / 8;
  const size_t row_stride = (static_cast<size_t>(width) * bytes_per_px + 3) & ~size_t{3};
  std::vector<unsigned char> row(row_stride);

  RgbImage rgb;
  rgb.height = height;
  rgb.width = width;
  rgb.rgb.resize(static_cast<size_t>(height) * width * 3);
  bool gray = true;
  for (int i = 0; i < height; ++i) {
    if (std::fread(row.data(), 1, row_stride, f) != row_stride) fail(path, "short BMP data");
    const int y = bottom_up ? height - 1 - i : i;
    for (int x = 0; x < width; ++x) {
      unsigned char r, g, b;
      if (bpp == 8) {
        const unsigned char idx = row[static_cast<size_t>(x)];
        const unsigned char* entry = palette.data() + static_cast<size_t>(idx) * 4;
        b = entry[0];
        g = entry[1];
        r = entry[2];
      } else {
        const unsigned char* px = row.data() + static_cast<size_t>(x) * bytes_per_px;
        b = px[0];
        g = px[1];
        r = px[2];
      }
      unsigned char* dst = rgb.pixel(y, x);
      dst[0] = r;
      dst[1] = g;
      dst[2] = b;
      if (r != g || g != b) gray = false;
    }
  }

  LoadedImage out;
  if (gray) {
    out.is_gray = true;
    out.gray = ImagePlane(height, width, kByteRange);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) out.gray.at(y, x) = rgb.pixel(y, x)[0];
    }
  } else {
    out.rgb = std::move(rgb);
  }
  return out;
}

}  // namespace

LoadedImage load_image(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) fail(path, "cannot open");
  unsigned char sig[8];
  const size_t got = std::fread(sig, 1, sizeof sig, f.get());
  std::rewind(f.get());
  if (got >= 8 && png_sig_cmp(sig, 0, 8) == 0) return load_png(path, f.get());
  if (got >= 2 && sig[0] == 'B' && sig[1] == 'M') return load_bmp(path, f.get());
  fail(path, "unrecognized image format (PNG and BMP are supported)");
}

ImagePlane load_luminance(const std::string& path) {
  LoadedImage img = load_image(path);
  if (img.is_gray) return std::move(img.gray);
  return rgb_to_ycbcr(img.rgb).y;
}

void write_png_gray(const std::string& path, const ImagePlane& img) {
  const ValueRange r = img.value_range();
  const double span = r.hi - r.lo;
  const double scale = span != 0.0 ? 255.0 / span : 0.0;
  std::vector<unsigned char> bytes(static_cast<size_t>(img.height()) * img.width());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double v = (img.at(y, x) - r.lo) * scale;
      v = std::min(255.0, std::max(0.0, v));
      bytes[static_cast<size_t>(y) * img.width() + x] =
          static_cast<unsigned char>(std::lround(v));
    }
  }

  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) fail(path, "cannot open for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(path, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(path, "png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(path, "PNG write failed");
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
               static_cast<png_uint_32>(img.height()), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height(); ++y) {
    png_write_row(png, bytes.data() + static_cast<size_t>(y) * img.width());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_png_rgb(const std::string& path, const RgbImage& img) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) fail(path, "cannot open for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(path, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(path, "png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(path, "PNG write failed");
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(img.rgb.data() +
                                             static_cast<size_t>(y) * img.width * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace ttdsr

#pragma once

#include <string>
#include <vector>

#include "ttdsr/image.hpp"

namespace ttdsr {

/// 8-bit RGB image, interleaved.
struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<unsigned char> rgb;  // 3 * height * width, R G B per pixel

  unsigned char* pixel(int y, int x) {
    return rgb.data() + (static_cast<size_t>(y) * width + x) * 3;
  }
  const unsigned char* pixel(int y, int x) const {
    return rgb.data() + (static_cast<size_t>(y) * width + x) * 3;
  }
};

struct LoadedImage {
  bool is_gray = false;
  ImagePlane gray;  // set when is_gray, values in [0,255]
  RgbImage rgb;     // set otherwise
};

/// Reads a PNG or BMP file (dispatch on content, not extension).
/// Throws std::runtime_error on unreadable or unsupported files.
LoadedImage load_image(const std::string& path);

/// Luminance plane in [0,255]: the single channel of a grayscale file, or
/// the BT.601 Y channel of a color one.
ImagePlane load_luminance(const std::string& path);

/// 8-bit grayscale PNG; pixels are rescaled from the plane's declared
/// value range and rounded.
void write_png_gray(const std::string& path, const ImagePlane& img);

void write_png_rgb(const std::string& path, const RgbImage& img);

}  // namespace ttdsr

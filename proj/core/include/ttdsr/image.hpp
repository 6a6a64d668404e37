#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ttdsr {

/// Raised when a training run produces a non-finite loss and must abort.
class DivergedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Declared pixel range of an image, e.g. (0,1) for normalized planes or
/// (0,255) for 8-bit-equivalent planes.
struct ValueRange {
  double lo = 0.0;
  double hi = 1.0;
};

inline constexpr ValueRange kUnitRange{0.0, 1.0};
inline constexpr ValueRange kByteRange{0.0, 255.0};

/// Single-channel real-valued image, stored row-major.
///
/// Pixels are expected to lie inside value_range() at I/O boundaries;
/// intermediate results of numeric transforms may exceed it until
/// clamp_to_range() is applied.
class ImagePlane {
 public:
  ImagePlane() = default;
  ImagePlane(int height, int width, ValueRange range = kUnitRange)
      : height_(height), width_(width), range_(range) {
    if (height < 1 || width < 1) {
      throw std::invalid_argument("ImagePlane: dimensions must be positive");
    }
    pixels_.assign(static_cast<size_t>(height) * width, 0.0);
  }

  static ImagePlane constant(int height, int width, double value,
                             ValueRange range = kUnitRange) {
    ImagePlane img(height, width, range);
    for (double& p : img.pixels_) p = value;
    return img;
  }

  int height() const { return height_; }
  int width() const { return width_; }
  ValueRange value_range() const { return range_; }
  void set_value_range(ValueRange r) { range_ = r; }

  double& at(int y, int x) { return pixels_[static_cast<size_t>(y) * width_ + x]; }
  double at(int y, int x) const { return pixels_[static_cast<size_t>(y) * width_ + x]; }

  std::vector<double>& pixels() { return pixels_; }
  const std::vector<double>& pixels() const { return pixels_; }

  bool same_dims(const ImagePlane& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  bool all_finite() const {
    for (double p : pixels_) {
      if (!std::isfinite(p)) return false;
    }
    return true;
  }

  void clamp_to_range() {
    for (double& p : pixels_) {
      if (p < range_.lo) p = range_.lo;
      if (p > range_.hi) p = range_.hi;
    }
  }

  /// Linear rescale of the declared range onto [0,1].
  ImagePlane to_unit_range() const;
  /// Linear rescale of the declared range onto another one.
  ImagePlane to_range(ValueRange target) const;

  ImagePlane crop(int y0, int x0, int h, int w) const;

 private:
  int height_ = 0;
  int width_ = 0;
  ValueRange range_ = kUnitRange;
  std::vector<double> pixels_;
};

}  // namespace ttdsr

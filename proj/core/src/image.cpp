#include "ttdsr/image.hpp"

namespace ttdsr {

ImagePlane ImagePlane::to_range(ValueRange target) const {
  ImagePlane out(height_, width_, target);
  const double span = range_.hi - range_.lo;
  const double tspan = target.hi - target.lo;
  const double scale = span != 0.0 ? tspan / span : 0.0;
  for (size_t i = 0; i < pixels_.size(); ++i) {
    out.pixels_[i] = (pixels_[i] - range_.lo) * scale + target.lo;
  }
  return out;
}

ImagePlane ImagePlane::to_unit_range() const { return to_range(kUnitRange); }

ImagePlane ImagePlane::crop(int y0, int x0, int h, int w) const {
  if (y0 < 0 || x0 < 0 || h < 1 || w < 1 || y0 + h > height_ || x0 + w > width_) {
    throw std::invalid_argument("ImagePlane::crop: window out of bounds");
  }
  ImagePlane out(h, w, range_);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.at(y, x) = at(y0 + y, x0 + x);
    }
  }
  return out;
}

}  // namespace ttdsr

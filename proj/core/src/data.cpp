#include "ttdsr/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "ttdsr/tensor.hpp"  // SplitMix64

namespace ttdsr {

namespace {

double clamp255(double v) { return std::min(255.0, std::max(0.0, v)); }

unsigned char quantize(double v) {
  return static_cast<unsigned char>(std::lround(clamp255(v)));
}

// Keys cubic convolution kernel with a = -0.5.
double keys_weight(double x) {
  constexpr double a = -0.5;
  x = std::fabs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

int clamp_index(int i, int n) { return std::min(n - 1, std::max(0, i)); }

struct TapSet {
  int base;          // first of four source indices (before clamping)
  double w[4];
};

TapSet taps_for(int dst_index, int src_size, int dst_size) {
  const double src = (dst_index + 0.5) * static_cast<double>(src_size) / dst_size - 0.5;
  const int i0 = static_cast<int>(std::floor(src));
  TapSet t;
  t.base = i0 - 1;
  for (int k = 0; k < 4; ++k) t.w[k] = keys_weight(src - (t.base + k));
  return t;
}

}  // namespace

YCbCrPlanes rgb_to_ycbcr(const RgbImage& img) {
  YCbCrPlanes out{ImagePlane(img.height, img.width, kByteRange),
                  ImagePlane(img.height, img.width, kByteRange),
                  ImagePlane(img.height, img.width, kByteRange)};
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const unsigned char* p = img.pixel(y, x);
      const double r = p[0], g = p[1], b = p[2];
      out.y.at(y, x) = 0.299 * r + 0.587 * g + 0.114 * b;
      out.cb.at(y, x) = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
      out.cr.at(y, x) = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
    }
  }
  return out;
}

RgbImage ycbcr_to_rgb(const ImagePlane& y, const ImagePlane& cb, const ImagePlane& cr) {
  if (!y.same_dims(cb) || !y.same_dims(cr)) {
    throw std::invalid_argument("ycbcr_to_rgb: plane dimensions differ");
  }
  RgbImage out;
  out.height = y.height();
  out.width = y.width();
  out.rgb.resize(static_cast<size_t>(out.height) * out.width * 3);
  for (int r = 0; r < out.height; ++r) {
    for (int c = 0; c < out.width; ++c) {
      const double yy = y.at(r, c);
      const double ub = cb.at(r, c) - 128.0;
      const double vr = cr.at(r, c) - 128.0;
      unsigned char* px = out.pixel(r, c);
      px[0] = quantize(yy + 1.402 * vr);
      px[1] = quantize(yy - 0.344136 * ub - 0.714136 * vr);
      px[2] = quantize(yy + 1.772 * ub);
    }
  }
  return out;
}

ImagePlane bicubic_resize(const ImagePlane& img, int target_h, int target_w) {
  if (target_h < 1 || target_w < 1) {
    throw std::invalid_argument("bicubic_resize: target dimensions must be >= 1");
  }
  const int sh = img.height(), sw = img.width();

  // Horizontal pass, then vertical.
  std::vector<double> mid(static_cast<size_t>(sh) * target_w);
  for (int x = 0; x < target_w; ++x) {
    const TapSet t = taps_for(x, sw, target_w);
    const int c[4] = {clamp_index(t.base, sw), clamp_index(t.base + 1, sw),
                      clamp_index(t.base + 2, sw), clamp_index(t.base + 3, sw)};
    for (int y = 0; y < sh; ++y) {
      mid[static_cast<size_t>(y) * target_w + x] =
          t.w[0] * img.at(y, c[0]) + t.w[1] * img.at(y, c[1]) +
          t.w[2] * img.at(y, c[2]) + t.w[3] * img.at(y, c[3]);
    }
  }

  ImagePlane out(target_h, target_w, img.value_range());
  for (int y = 0; y < target_h; ++y) {
    const TapSet t = taps_for(y, sh, target_h);
    const int r[4] = {clamp_index(t.base, sh), clamp_index(t.base + 1, sh),
                      clamp_index(t.base + 2, sh), clamp_index(t.base + 3, sh)};
    for (int x = 0; x < target_w; ++x) {
      out.at(y, x) = t.w[0] * mid[static_cast<size_t>(r[0]) * target_w + x] +
                     t.w[1] * mid[static_cast<size_t>(r[1]) * target_w + x] +
                     t.w[2] * mid[static_cast<size_t>(r[2]) * target_w + x] +
                     t.w[3] * mid[static_cast<size_t>(r[3]) * target_w + x];
    }
  }
  return out;
}

TrainingPair degrade(const ImagePlane& hr, int scale) {
  if (scale < 1) throw std::invalid_argument("degrade: scale must be >= 1");
  const int ch = hr.height() - hr.height() % scale;
  const int cw = hr.width() - hr.width() % scale;
  if (ch < 1 || cw < 1) throw std::invalid_argument("degrade: image smaller than scale");

  TrainingPair pair;
  pair.scale_factor = scale;
  pair.hr = (ch == hr.height() && cw == hr.width()) ? hr : hr.crop(0, 0, ch, cw);
  const ImagePlane down = bicubic_resize(pair.hr, ch / scale, cw / scale);
  pair.lr = bicubic_resize(down, ch, cw);
  pair.lr.clamp_to_range();
  return pair;
}

ImagePlane flip_horizontal(const ImagePlane& img) {
  ImagePlane out(img.height(), img.width(), img.value_range());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) out.at(y, x) = img.at(y, img.width() - 1 - x);
  }
  return out;
}

ImagePlane flip_vertical(const ImagePlane& img) {
  ImagePlane out(img.height(), img.width(), img.value_range());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) out.at(y, x) = img.at(img.height() - 1 - y, x);
  }
  return out;
}

ImagePlane rotate_quarter(const ImagePlane& img, int quarter_turns) {
  const int q = ((quarter_turns % 4) + 4) % 4;
  const int h = img.height(), w = img.width();
  if (q == 0) return img;
  ImagePlane out(q == 2 ? h : w, q == 2 ? w : h, img.value_range());
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      double v;
      if (q == 1) {
        v = img.at(x, w - 1 - y);  // 90 degrees counterclockwise
      } else if (q == 2) {
        v = img.at(h - 1 - y, w - 1 - x);
      } else {
        v = img.at(h - 1 - x, y);
      }
      out.at(y, x) = v;
    }
  }
  return out;
}

namespace {

// Largest axis-aligned rectangle inscribed in a w x h rectangle rotated by
// the given angle.
void max_inscribed(double w, double h, double radians, double& out_w, double& out_h) {
  const double sin_a = std::fabs(std::sin(radians));
  const double cos_a = std::fabs(std::cos(radians));
  const bool width_longer = w >= h;
  const double side_long = width_longer ? w : h;
  const double side_short = width_longer ? h : w;
  if (side_short <= 2.0 * sin_a * cos_a * side_long ||
      std::fabs(sin_a - cos_a) < 1e-10) {
    const double x = 0.5 * side_short;
    out_w = width_longer ? x / sin_a : x / cos_a;
    out_h = width_longer ? x / cos_a : x / sin_a;
  } else {
    const double cos_2a = cos_a * cos_a - sin_a * sin_a;
    out_w = (w * cos_a - h * sin_a) / cos_2a;
    out_h = (h * cos_a - w * sin_a) / cos_2a;
  }
}

double sample_bicubic_clamped(const ImagePlane& img, double sy, double sx) {
  const int y0 = static_cast<int>(std::floor(sy)) - 1;
  const int x0 = static_cast<int>(std::floor(sx)) - 1;
  double acc = 0.0;
  for (int u = 0; u < 4; ++u) {
    const double wy = keys_weight(sy - (y0 + u));
    if (wy == 0.0) continue;
    const int yy = clamp_index(y0 + u, img.height());
    double row = 0.0;
    for (int v = 0; v < 4; ++v) {
      const double wx = keys_weight(sx - (x0 + v));
      if (wx == 0.0) continue;
      row += wx * img.at(yy, clamp_index(x0 + v, img.width()));
    }
    acc += wy * row;
  }
  return acc;
}

}  // namespace

ImagePlane rotate_bicubic_cropped(const ImagePlane& img, double degrees) {
  const double rad = degrees * M_PI / 180.0;
  double crop_w, crop_h;
  max_inscribed(img.width(), img.height(), rad, crop_w, crop_h);
  const int ow = std::max(1, static_cast<int>(std::floor(crop_w)));
  const int oh = std::max(1, static_cast<int>(std::floor(crop_h)));

  const double cy = 0.5 * (img.height() - 1);
  const double cx = 0.5 * (img.width() - 1);
  const double ocy = 0.5 * (oh - 1);
  const double ocx = 0.5 * (ow - 1);
  const double c = std::cos(rad);
  const double s = std::sin(rad);

  ImagePlane out(oh, ow, img.value_range());
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      const double dy = y - ocy;
      const double dx = x - ocx;
      // inverse rotation back into source coordinates
      const double sx = c * dx - s * dy + cx;
      const double sy = s * dx + c * dy + cy;
      out.at(y, x) = sample_bicubic_clamped(img, sy, sx);
    }
  }
  out.clamp_to_range();
  return out;
}

std::vector<ImagePlane> augment(const ImagePlane& img) {
  std::vector<ImagePlane> variants;
  variants.reserve(12);
  variants.push_back(img);
  variants.push_back(rotate_bicubic_cropped(img, 45.0));
  variants.push_back(rotate_quarter(img, 1));
  variants.push_back(rotate_bicubic_cropped(img, 135.0));
  variants.push_back(rotate_quarter(img, 2));
  variants.push_back(rotate_bicubic_cropped(img, 225.0));
  variants.push_back(flip_horizontal(img));
  variants.push_back(flip_vertical(img));
  for (double f : {0.6, 0.7, 0.8, 0.9}) {
    const int th = std::max(1, static_cast<int>(std::lround(img.height() * f)));
    const int tw = std::max(1, static_cast<int>(std::lround(img.width() * f)));
    ImagePlane scaled = bicubic_resize(img, th, tw);
    scaled.clamp_to_range();
    variants.push_back(std::move(scaled));
  }
  return variants;
}

std::vector<TrainingPair> extract_patches(const std::vector<ImagePlane>& sources,
                                          int patch, int stride, int scale,
                                          std::uint64_t seed) {
  if (patch < 16) throw std::invalid_argument("extract_patches: patch must be >= 16");
  if (stride < 1) throw std::invalid_argument("extract_patches: stride must be >= 1");
  std::vector<TrainingPair> pairs;
  for (size_t i = 0; i < sources.size(); ++i) {
    const ImagePlane& src = sources[i];
    if (src.height() < patch || src.width() < patch) {
      std::fprintf(stderr,
                   "extract_patches: skipping source %zu (%dx%d smaller than patch %d)\n",
                   i, src.height(), src.width(), patch);
      continue;
    }
    for (int y = 0; y + patch <= src.height(); y += stride) {
      for (int x = 0; x + patch <= src.width(); x += stride) {
        pairs.push_back(degrade(src.crop(y, x, patch, patch), scale));
      }
    }
  }
  ad::SplitMix64 rng(seed);
  for (size_t i = pairs.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.next_u64() % i);
    std::swap(pairs[i - 1], pairs[j]);
  }
  return pairs;
}

std::vector<std::string> read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_manifest: cannot open: " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(is, line)) {
    const auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    const auto end = line.find_last_not_of(" \t\r");
    std::string trimmed = line.substr(begin, end - begin + 1);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    out.push_back(std::move(trimmed));
  }
  return out;
}

DatasetSplit split_by_path_hash(const std::vector<std::string>& paths,
                                unsigned val_percent) {
  DatasetSplit split;
  for (const std::string& p : paths) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char c : p) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    if (h % 100 < val_percent) {
      split.val.push_back(p);
    } else {
      split.train.push_back(p);
    }
  }
  return split;
}

}  // namespace ttdsr

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ttdsr/image.hpp"
#include "ttdsr/image_io.hpp"

namespace ttdsr {

struct YCbCrPlanes {
  ImagePlane y, cb, cr;  // all in [0,255]
};

/// ITU-R BT.601 full-range conversion. Round trip through 8-bit
/// quantization is exact to within one level per channel.
YCbCrPlanes rgb_to_ycbcr(const RgbImage& img);
RgbImage ycbcr_to_rgb(const ImagePlane& y, const ImagePlane& cb, const ImagePlane& cr);

/// Keys bicubic resampling (a = -0.5), edge-clamped, with center-aligned
/// coordinate mapping src = (dst + 0.5) * size_ratio - 0.5. Resizing to
/// the same dimensions reproduces the input exactly.
ImagePlane bicubic_resize(const ImagePlane& img, int target_h, int target_w);

/// An aligned LR/HR patch pair; lr is the bicubic down-and-up degraded
/// version of hr at the pair's scale factor, both in [0,1].
struct TrainingPair {
  ImagePlane lr;
  ImagePlane hr;
  int scale_factor = 0;
};

/// Bicubic degradation: crop hr to a multiple of scale, downsample by
/// scale, upsample back. Output pair has the cropped hr dimensions and is
/// clamped to the hr value range.
TrainingPair degrade(const ImagePlane& hr, int scale);

ImagePlane flip_horizontal(const ImagePlane& img);
ImagePlane flip_vertical(const ImagePlane& img);
/// Exact rotation by quarter_turns * 90 degrees counterclockwise.
ImagePlane rotate_quarter(const ImagePlane& img, int quarter_turns);
/// Arbitrary-angle rotation: bicubic sampling with edge clamp, cropped to
/// the largest axis-aligned rectangle inscribed in the rotated image so no
/// undefined corners remain.
ImagePlane rotate_bicubic_cropped(const ImagePlane& img, double degrees);

/// The 12 training variants of one image, in fixed order: the original,
/// rotations by 45/90/135/180/225 degrees, horizontal and vertical flips,
/// and downscales by 0.6/0.7/0.8/0.9.
std::vector<ImagePlane> augment(const ImagePlane& img);

/// HR patches on a regular grid from each source image, each paired with
/// its own bicubic degradation, then shuffled deterministically by seed.
/// Sources smaller than the patch size are skipped with a warning on
/// stderr. Source images are expected in [0,1].
std::vector<TrainingPair> extract_patches(const std::vector<ImagePlane>& sources,
                                          int patch, int stride, int scale,
                                          std::uint64_t seed);

/// Line-oriented list of image paths; blank lines and #-comments ignored.
std::vector<std::string> read_manifest(const std::string& path);

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> val;
};

/// Deterministic train/val split: a path lands in the validation set when
/// its FNV-1a hash modulo 100 falls below val_percent.
DatasetSplit split_by_path_hash(const std::vector<std::string>& paths,
                                unsigned val_percent = 10);

}  // namespace ttdsr

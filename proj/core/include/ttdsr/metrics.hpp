#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "ttdsr/image.hpp"

namespace ttdsr::metrics {

/// 10*log10(peak^2 / MSE) in dB. Identical images return the +infinity
/// sentinel; aggregation skips such entries explicitly.
double psnr(const ImagePlane& a, const ImagePlane& b, double peak);

/// Single-scale SSIM: 11x11 Gaussian window with sigma 1.5, K1 = 0.01,
/// K2 = 0.03, averaged over valid (unpadded) window positions. Requires
/// images of at least 11x11.
double ssim(const ImagePlane& a, const ImagePlane& b, double peak);

struct ImageScore {
  std::string path;
  double psnr_db = 0.0;
  double ssim = 0.0;
};

struct ScoreReport {
  std::vector<ImageScore> images;
  double mean_psnr_db = 0.0;  // arithmetic mean over finite entries
  double mean_ssim = 0.0;
  int infinite_psnr_count = 0;
};

/// Produces the SR estimate of a [0,255] luminance plane at the given
/// scale; output dimensions must be scale times the input's.
using Resolver = std::function<ImagePlane(const ImagePlane& lr, int scale)>;

/// Plain bicubic upscaling; scoring it gives the baseline row of the
/// comparison tables.
Resolver bicubic_resolver();

/// Evaluation protocol over every readable PNG/BMP in a directory: crop
/// the ground truth to a multiple of scale, bicubic-downsample, run the
/// resolver, then score PSNR/SSIM on the luminance plane with a border of
/// `scale` pixels cropped from each side. Deterministic: images are
/// processed in sorted path order.
ScoreReport evaluate_dir(const Resolver& resolver, const std::string& hr_dir, int scale);

/// Human-readable listing plus one tab-separated row per image
/// (path, psnr_db, ssim).
void write_report(const ScoreReport& report, std::ostream& text, std::ostream& tsv);

}  // namespace ttdsr::metrics

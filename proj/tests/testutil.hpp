#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "ttdsr/image.hpp"
#include "ttdsr/tensor.hpp"

namespace ttdsr::testutil {

/// Deterministic synthetic test image in [0,1]: smooth cosine background,
/// sharp-edged ellipses and oriented sinusoidal texture patches. Edge and
/// texture content gives the bicubic degradation something to destroy,
/// which is what the frequency-analysis and training tests need.
ImagePlane procedural_image(std::uint64_t seed, int height, int width);

/// Uniform double in [lo, hi) from the shared deterministic generator.
inline double uniform(ad::SplitMix64& rng, double lo, double hi) {
  return lo + (hi - lo) * rng.next_unit();
}

/// Fills a tensor with uniform values in [lo, hi).
void fill_uniform(ad::Tensor& t, std::uint64_t seed, double lo, double hi);

/// Central finite differences against the analytic gradients of `checked`.
///
/// make_loss must rebuild the graph from the checked tensors' current data
/// and return a scalar. Reported error per element is
///   |analytic - numeric| / max(1, |analytic|, |numeric|).
/// `max_checks_per_tensor` = 0 sweeps every element.
double max_fd_rel_error(const std::function<ad::Tensor()>& make_loss,
                        const std::vector<ad::Tensor>& checked,
                        double step = 1e-5, std::size_t max_checks_per_tensor = 0);

/// Direct (non-separable) Keys bicubic resampler: 4x4 product-weight taps,
/// edge clamp, center-aligned mapping. Second implementation used as the
/// oracle for the production resizer.
ImagePlane bicubic_reference(const ImagePlane& img, int target_h, int target_w);

/// Plain nested-loop single-scale SSIM (11x11 Gaussian, sigma 1.5,
/// K1 = 0.01, K2 = 0.03) written independently from the production code.
double ssim_reference(const ImagePlane& a, const ImagePlane& b, double peak);

}  // namespace ttdsr::testutil

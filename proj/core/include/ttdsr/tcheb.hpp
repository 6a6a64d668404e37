#pragma once

#include <array>
#include <ostream>
#include <utility>
#include <vector>

#include "ttdsr/image.hpp"

namespace ttdsr::tcheb {

/// Fixed geometry of the 8x8 transform kernels used by the TCL/ITCL layers.
inline constexpr int kKernelSize = 8;
inline constexpr int kNumKernels = kKernelSize * kKernelSize;

/// "Same" zero padding for the even 8x8 kernels: 3 rows/cols before, 4 after.
inline constexpr int kPadBefore = 3;
inline constexpr int kPadAfter = 4;

/// One 8x8 basis kernel, row-major.
using Kernel8 = std::array<double, kNumKernels>;

/// JPEG-style antidiagonal scan of a grid_size x grid_size index grid.
/// Returns grid_size^2 (row, col) pairs; row+col is non-decreasing along
/// the sequence, so kernel frequency content increases with scan index.
std::vector<std::pair<int, int>> zigzag_order(int grid_size);

/// Orthonormal Tchebichef polynomial basis on N integer points.
///
/// Row p of poly_matrix() holds t_p(0..N-1), generated by the three-term
/// recurrence with initial rows 1/sqrt(N) and (2x+1-N)*sqrt(3/(N(N^2-1))).
/// The recurrence runs in extended precision and a Gram-Schmidt sweep
/// removes the residual non-orthogonality that accumulates at larger N,
/// so poly_matrix() * poly_matrix()^T stays within 1e-10 of identity.
///
/// For N == 8 the 64 zig-zag-ordered rank-one kernels w_i = t_p^T t_q are
/// precomputed; they are the filters of the transform-domain layers.
/// Immutable after construction and safe to share across threads.
class TchebichefBasis {
 public:
  explicit TchebichefBasis(int n_points);

  int n_points() const { return n_points_; }

  /// t_p(x); p and x both in [0, N).
  double poly(int p, int x) const {
    return poly_matrix_[static_cast<size_t>(p) * n_points_ + x];
  }

  /// Row-major N x N matrix, row p = t_p evaluated on 0..N-1.
  const std::vector<double>& poly_matrix() const { return poly_matrix_; }

  /// The 64 zig-zag-ordered 8x8 kernels. Only defined for N == 8.
  const std::vector<Kernel8>& kernels() const;

  /// Plain-text dump: one row per line, space-separated, 17 significant
  /// digits (round-trips exactly through strtod).
  void dump_matrix(std::ostream& os) const;

 private:
  int n_points_;
  std::vector<double> poly_matrix_;
  std::vector<Kernel8> kernels_;  // empty unless N == 8
};

/// N x N matrix of Tchebichef moments of an N x N image block.
struct MomentMatrix {
  int n = 0;
  std::vector<double> coeffs;  // row-major, coeffs[p*n + q]

  double at(int p, int q) const { return coeffs[static_cast<size_t>(p) * n + q]; }
  double& at(int p, int q) { return coeffs[static_cast<size_t>(p) * n + q]; }
};

/// Moments of a square image: T = P * G * P^T.
MomentMatrix forward_moments(const ImagePlane& image, const TchebichefBasis& basis);

/// Inverse transform: G = P^T * T * P. Exact round trip by orthonormality.
ImagePlane inverse_moments(const MomentMatrix& moments, const TchebichefBasis& basis);

/// 64-channel stack of full-image transform coefficients in zig-zag order,
/// partitioned at split_point into low [0..T] and high [T+1..63] channels.
struct FrequencyCube {
  int height = 0;
  int width = 0;
  int split_point = 5;
  std::vector<std::vector<double>> channels;  // 64 maps, each height*width

  double at(int channel, int y, int x) const {
    return channels[channel][static_cast<size_t>(y) * width + x];
  }
};

/// Slides every 8x8 kernel over the image (cross-correlation, stride 1,
/// zero "same" padding of 3 before / 4 after) producing 64 feature maps of
/// the image's size. At interior alignments channel i equals the (p,q)
/// moment of the covered 8x8 window, with (p,q) the i-th zig-zag index.
FrequencyCube tcl_transform(const ImagePlane& image, const TchebichefBasis& basis,
                            int split_point = 5);

/// Mean |coefficient| of tcl_transform(hr) minus mean |coefficient| of
/// tcl_transform(lr), per channel. Boundary-affected outputs are included
/// in the means.
std::array<double, kNumKernels> coefficient_loss_profile(const ImagePlane& hr,
                                                         const ImagePlane& lr,
                                                         const TchebichefBasis& basis);

}  // namespace ttdsr::tcheb

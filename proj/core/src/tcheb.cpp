#include "ttdsr/tcheb.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace ttdsr::tcheb {

std::vector<std::pair<int, int>> zigzag_order(int grid_size) {
  if (grid_size < 1) {
    throw std::invalid_argument("zigzag_order: grid_size must be >= 1");
  }
  const int n = grid_size;
  std::vector<std::pair<int, int>> order;
  order.reserve(static_cast<size_t>(n) * n);
  for (int s = 0; s <= 2 * (n - 1); ++s) {
    const int lo = std::max(0, s - n + 1);
    const int hi = std::min(s, n - 1);
    if (s % 2 == 0) {
      for (int r = hi; r >= lo; --r) order.emplace_back(r, s - r);
    } else {
      for (int r = lo; r <= hi; ++r) order.emplace_back(r, s - r);
    }
  }
  return order;
}

namespace {

// Three-term recurrence in extended precision. Accurate on its own to
// ~1e-12 for N <= 32; larger N needs the cleanup sweep below.
std::vector<long double> recurrence_rows(int n) {
  const long double nf = static_cast<long double>(n);
  std::vector<long double> rows(static_cast<size_t>(n) * n);
  for (int x = 0; x < n; ++x) {
    rows[x] = 1.0L / std::sqrt(nf);
  }
  if (n >= 2) {
    const long double c1 = std::sqrt(3.0L / (nf * (nf * nf - 1.0L)));
    for (int x = 0; x < n; ++x) {
      rows[static_cast<size_t>(n) + x] = (2.0L * x + 1.0L - nf) * c1;
    }
  }
  for (int p = 2; p < n; ++p) {
    const long double pf = static_cast<long double>(p);
    const long double a1 =
        (1.0L / pf) * std::sqrt((4.0L * pf * pf - 1.0L) / (nf * nf - pf * pf));
    const long double a2 = ((1.0L - pf) / pf) *
                           std::sqrt((2.0L * pf + 1.0L) / (2.0L * pf - 3.0L)) *
                           std::sqrt((nf * nf - (pf - 1.0L) * (pf - 1.0L)) /
                                     (nf * nf - pf * pf));
    long double* cur = &rows[static_cast<size_t>(p) * n];
    const long double* prev1 = &rows[static_cast<size_t>(p - 1) * n];
    const long double* prev2 = &rows[static_cast<size_t>(p - 2) * n];
    for (int x = 0; x < n; ++x) {
      cur[x] = a1 * (2.0L * x + 1.0L - nf) * prev1[x] + a2 * prev2[x];
    }
  }
  return rows;
}

// Modified Gram-Schmidt against preceding rows. The rows are already
// near-orthonormal, so this perturbs values only at the level of the
// recurrence's own rounding error while pinning P*P^T to identity.
void orthonormalize_rows(std::vector<long double>& rows, int n) {
  for (int p = 0; p < n; ++p) {
    long double* rp = &rows[static_cast<size_t>(p) * n];
    for (int q = 0; q < p; ++q) {
      const long double* rq = &rows[static_cast<size_t>(q) * n];
      long double dot = 0.0L;
      for (int x = 0; x < n; ++x) dot += rp[x] * rq[x];
      for (int x = 0; x < n; ++x) rp[x] -= dot * rq[x];
    }
    long double norm = 0.0L;
    for (int x = 0; x < n; ++x) norm += rp[x] * rp[x];
    norm = std::sqrt(norm);
    for (int x = 0; x < n; ++x) rp[x] /= norm;
  }
}

}  // namespace

TchebichefBasis::TchebichefBasis(int n_points) : n_points_(n_points) {
  if (n_points < 2) {
    throw std::invalid_argument("TchebichefBasis: n_points must be >= 2");
  }
  auto rows = recurrence_rows(n_points);
  orthonormalize_rows(rows, n_points);
  poly_matrix_.resize(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    poly_matrix_[i] = static_cast<double>(rows[i]);
  }

  if (n_points == kKernelSize) {
    const auto order = zigzag_order(kKernelSize);
    kernels_.resize(kNumKernels);
    for (int i = 0; i < kNumKernels; ++i) {
      const auto [p, q] = order[i];
      for (int u = 0; u < kKernelSize; ++u) {
        for (int v = 0; v < kKernelSize; ++v) {
          kernels_[i][static_cast<size_t>(u) * kKernelSize + v] = poly(p, u) * poly(q, v);
        }
      }
    }
  }
}

const std::vector<Kernel8>& TchebichefBasis::kernels() const {
  if (kernels_.empty()) {
    throw std::logic_error("TchebichefBasis: kernels are only defined for N == 8");
  }
  return kernels_;
}

void TchebichefBasis::dump_matrix(std::ostream& os) const {
  char buf[64];
  for (int p = 0; p < n_points_; ++p) {
    for (int x = 0; x < n_points_; ++x) {
      std::snprintf(buf, sizeof buf, "%.17g", poly(p, x));
      os << buf << (x + 1 < n_points_ ? " " : "");
    }
    os << '\n';
  }
}

MomentMatrix forward_moments(const ImagePlane& image, const TchebichefBasis& basis) {
  const int n = basis.n_points();
  if (image.height() != n || image.width() != n) {
    throw std::invalid_argument("forward_moments: image must be N x N with N = basis.n_points");
  }
  // T = P * G * P^T
  std::vector<double> pg(static_cast<size_t>(n) * n, 0.0);
  for (int p = 0; p < n; ++p) {
    for (int y = 0; y < n; ++y) {
      double acc = 0.0;
      for (int x = 0; x < n; ++x) acc += basis.poly(p, x) * image.at(x, y);
      pg[static_cast<size_t>(p) * n + y] = acc;
    }
  }
  MomentMatrix m;
  m.n = n;
  m.coeffs.assign(static_cast<size_t>(n) * n, 0.0);
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q < n; ++q) {
      double acc = 0.0;
      for (int y = 0; y < n; ++y) acc += pg[static_cast<size_t>(p) * n + y] * basis.poly(q, y);
      m.at(p, q) = acc;
    }
  }
  return m;
}

ImagePlane inverse_moments(const MomentMatrix& moments, const TchebichefBasis& basis) {
  const int n = basis.n_points();
  if (moments.n != n || moments.coeffs.size() != static_cast<size_t>(n) * n) {
    throw std::invalid_argument("inverse_moments: moments must be N x N with N = basis.n_points");
  }
  // G = P^T * T * P
  std::vector<double> pt(static_cast<size_t>(n) * n, 0.0);
  for (int x = 0; x < n; ++x) {
    for (int q = 0; q < n; ++q) {
      double acc = 0.0;
      for (int p = 0; p < n; ++p) acc += basis.poly(p, x) * moments.at(p, q);
      pt[static_cast<size_t>(x) * n + q] = acc;
    }
  }
  ImagePlane out(n, n);
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      double acc = 0.0;
      for (int q = 0; q < n; ++q) acc += pt[static_cast<size_t>(x) * n + q] * basis.poly(q, y);
      out.at(x, y) = acc;
    }
  }
  return out;
}

FrequencyCube tcl_transform(const ImagePlane& image, const TchebichefBasis& basis,
                            int split_point) {
  if (basis.n_points() != kKernelSize) {
    throw std::invalid_argument("tcl_transform: basis must have n_points == 8");
  }
  const int h = image.height();
  const int w = image.width();
  if (h < kKernelSize || w < kKernelSize) {
    throw std::invalid_argument("tcl_transform: image smaller than the 8x8 kernel");
  }
  if (split_point < 1 || split_point > 62) {
    throw std::invalid_argument("tcl_transform: split_point must be in [1, 62]");
  }
  const auto& kernels = basis.kernels();

  FrequencyCube cube;
  cube.height = h;
  cube.width = w;
  cube.split_point = split_point;
  cube.channels.assign(kNumKernels, std::vector<double>(static_cast<size_t>(h) * w, 0.0));

#pragma omp parallel for schedule(static)
  for (int i = 0; i < kNumKernels; ++i) {
    const Kernel8& k = kernels[i];
    std::vector<double>& out = cube.channels[i];
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int u = 0; u < kKernelSize; ++u) {
          const int sy = y + u - kPadBefore;
          if (sy < 0 || sy >= h) continue;
          for (int v = 0; v < kKernelSize; ++v) {
            const int sx = x + v - kPadBefore;
            if (sx < 0 || sx >= w) continue;
            acc += k[static_cast<size_t>(u) * kKernelSize + v] * image.at(sy, sx);
          }
        }
        out[static_cast<size_t>(y) * w + x] = acc;
      }
    }
  }
  return cube;
}

std::array<double, kNumKernels> coefficient_loss_profile(const ImagePlane& hr,
                                                         const ImagePlane& lr,
                                                         const TchebichefBasis& basis) {
  if (!hr.same_dims(lr)) {
    throw std::invalid_argument("coefficient_loss_profile: hr and lr dimensions differ");
  }
  const FrequencyCube fh = tcl_transform(hr, basis);
  const FrequencyCube fl = tcl_transform(lr, basis);
  const double count = static_cast<double>(hr.height()) * hr.width();
  std::array<double, kNumKernels> profile{};
  for (int i = 0; i < kNumKernels; ++i) {
    double sh = 0.0, sl = 0.0;
    for (size_t j = 0; j < fh.channels[i].size(); ++j) {
      sh += std::fabs(fh.channels[i][j]);
      sl += std::fabs(fl.channels[i][j]);
    }
    profile[i] = (sh - sl) / count;
  }
  return profile;
}

}  // namespace ttdsr::tcheb

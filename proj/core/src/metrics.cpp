#include "ttdsr/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <exception>
#include <filesystem>
#include <limits>
#include <stdexcept>

#include "ttdsr/data.hpp"
#include "ttdsr/image_io.hpp"

namespace ttdsr::metrics {

double psnr(const ImagePlane& a, const ImagePlane& b, double peak) {
  if (!a.same_dims(b)) throw std::invalid_argument("psnr: dimensions differ");
  if (peak <= 0.0) throw std::invalid_argument("psnr: peak must be > 0");
  double acc = 0.0;
  const auto& pa = a.pixels();
  const auto& pb = b.pixels();
  for (size_t i = 0; i < pa.size(); ++i) {
    const double d = pa[i] - pb[i];
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(pa.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;

const std::vector<double>& gaussian_window() {
  static const std::vector<double> w = [] {
    std::vector<double> win(kSsimWindow * kSsimWindow);
    const int half = kSsimWindow / 2;
    double sum = 0.0;
    for (int y = 0; y < kSsimWindow; ++y) {
      for (int x = 0; x < kSsimWindow; ++x) {
        const double dy = y - half, dx = x - half;
        const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * kSsimSigma * kSsimSigma));
        win[static_cast<size_t>(y) * kSsimWindow + x] = v;
        sum += v;
      }
    }
    for (double& v : win) v /= sum;
    return win;
  }();
  return w;
}

}  // namespace

double ssim(const ImagePlane& a, const ImagePlane& b, double peak) {
  if (!a.same_dims(b)) throw std::invalid_argument("ssim: dimensions differ");
  if (a.height() < kSsimWindow || a.width() < kSsimWindow) {
    throw std::invalid_argument("ssim: images must be at least 11x11");
  }
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  const auto& win = gaussian_window();

  const int oh = a.height() - kSsimWindow + 1;
  const int ow = a.width() - kSsimWindow + 1;
  double total = 0.0;
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
      for (int u = 0; u < kSsimWindow; ++u) {
        for (int v = 0; v < kSsimWindow; ++v) {
          const double w = win[static_cast<size_t>(u) * kSsimWindow + v];
          const double va = a.at(y + u, x + v);
          const double vb = b.at(y + u, x + v);
          mu_a += w * va;
          mu_b += w * vb;
          aa += w * va * va;
          bb += w * vb * vb;
          ab += w * va * vb;
        }
      }
      const double var_a = aa - mu_a * mu_a;
      const double var_b = bb - mu_b * mu_b;
      const double cov = ab - mu_a * mu_b;
      total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
               ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
    }
  }
  return total / (static_cast<double>(oh) * ow);
}

Resolver bicubic_resolver() {
  return [](const ImagePlane& lr, int scale) {
    return bicubic_resize(lr, lr.height() * scale, lr.width() * scale);
  };
}

ScoreReport evaluate_dir(const Resolver& resolver, const std::string& hr_dir, int scale) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(hr_dir)) {
    throw std::invalid_argument("evaluate_dir: not a directory: " + hr_dir);
  }
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(hr_dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".png" || ext == ".bmp") paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) {
    throw std::invalid_argument("evaluate_dir: no PNG/BMP images in " + hr_dir);
  }

  ScoreReport report;
  report.images.resize(paths.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(paths.size()); ++i) {
    try {
      const ImagePlane hr_full = load_luminance(paths[i]);
      const int ch = hr_full.height() - hr_full.height() % scale;
      const int cw = hr_full.width() - hr_full.width() % scale;
      const ImagePlane hr = hr_full.crop(0, 0, ch, cw);
      const ImagePlane lr_small = bicubic_resize(hr, ch / scale, cw / scale);
      ImagePlane sr = resolver(lr_small, scale);
      if (sr.height() != ch || sr.width() != cw) {
        throw std::runtime_error("evaluate_dir: resolver returned wrong dimensions for " +
                                 paths[i]);
      }
      // Standard SISR convention: drop a border of `scale` pixels before scoring.
      const ImagePlane hr_c = hr.crop(scale, scale, ch - 2 * scale, cw - 2 * scale);
      const ImagePlane sr_c = sr.crop(scale, scale, ch - 2 * scale, cw - 2 * scale);
      report.images[i] = {paths[i], psnr(hr_c, sr_c, 255.0), ssim(hr_c, sr_c, 255.0)};
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  double psnr_sum = 0.0, ssim_sum = 0.0;
  int finite = 0;
  for (const ImageScore& s : report.images) {
    ssim_sum += s.ssim;
    if (std::isinf(s.psnr_db)) {
      ++report.infinite_psnr_count;
    } else {
      psnr_sum += s.psnr_db;
      ++finite;
    }
  }
  report.mean_psnr_db = finite > 0 ? psnr_sum / finite : std::numeric_limits<double>::infinity();
  report.mean_ssim = ssim_sum / static_cast<double>(report.images.size());
  return report;
}

void write_report(const ScoreReport& report, std::ostream& text, std::ostream& tsv) {
  tsv << "path\tpsnr_db\tssim\n";
  for (const ImageScore& s : report.images) {
    char line[64];
    std::snprintf(line, sizeof line, "\t%.6f\t%.6f\n", s.psnr_db, s.ssim);
    tsv << s.path << line;
    text << s.path << "  psnr=" << s.psnr_db << " dB  ssim=" << s.ssim << '\n';
  }
  text << "mean over " << report.images.size() << " images: psnr=" << report.mean_psnr_db
       << " dB  ssim=" << report.mean_ssim;
  if (report.infinite_psnr_count > 0) {
    text << "  (" << report.infinite_psnr_count << " identical-image PSNR entries skipped)";
  }
  text << '\n';
}

}  // namespace ttdsr::metrics

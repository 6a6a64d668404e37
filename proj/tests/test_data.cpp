#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "testutil.hpp"
#include "ttdsr/data.hpp"
#include "ttdsr/image_io.hpp"

using namespace ttdsr;

namespace {

RgbImage random_rgb(std::uint64_t seed, int h, int w) {
  RgbImage img;
  img.height = h;
  img.width = w;
  img.rgb.resize(static_cast<size_t>(h) * w * 3);
  ad::SplitMix64 rng(seed);
  for (auto& v : img.rgb) v = static_cast<unsigned char>(rng.next_u64() % 256);
  return img;
}

std::filesystem::path temp_dir(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("BT.601 white point and achromatic axis") {
  RgbImage img;
  img.height = 1;
  img.width = 2;
  img.rgb = {255, 255, 255, 128, 128, 128};
  const YCbCrPlanes planes = rgb_to_ycbcr(img);
  CHECK(planes.y.at(0, 0) == doctest::Approx(255.0));
  CHECK(planes.cb.at(0, 0) == doctest::Approx(128.0));
  CHECK(planes.cr.at(0, 0) == doctest::Approx(128.0));
  CHECK(planes.y.at(0, 1) == doctest::Approx(128.0));
  CHECK(planes.cb.at(0, 1) == doctest::Approx(128.0));
  CHECK(planes.cr.at(0, 1) == doctest::Approx(128.0));
}

TEST_CASE("color round trip stays within one 8-bit level per channel") {
  const RgbImage img = random_rgb(5, 40, 37);
  const YCbCrPlanes planes = rgb_to_ycbcr(img);
  const RgbImage back = ycbcr_to_rgb(planes.y, planes.cb, planes.cr);
  int max_err = 0;
  for (size_t i = 0; i < img.rgb.size(); ++i) {
    max_err = std::max(max_err, std::abs(static_cast<int>(img.rgb[i]) -
                                         static_cast<int>(back.rgb[i])));
  }
  CHECK(max_err <= 1);
}

TEST_CASE("color conversion matches the closed-form matrices") {
  const RgbImage img = random_rgb(6, 8, 8);
  const YCbCrPlanes planes = rgb_to_ycbcr(img);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      const unsigned char* p = img.pixel(y, x);
      const double expected_y = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
      CHECK(planes.y.at(y, x) == doctest::Approx(expected_y).epsilon(1e-12));
    }
  }
}

TEST_CASE("bicubic resize keeps constants exactly") {
  const ImagePlane img = ImagePlane::constant(9, 13, 0.37);
  const ImagePlane up = bicubic_resize(img, 27, 40);
  for (double v : up.pixels()) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("bicubic identity resize returns the input exactly") {
  const ImagePlane img = testutil::procedural_image(8, 17, 19);
  const ImagePlane same = bicubic_resize(img, 17, 19);
  for (size_t i = 0; i < img.pixels().size(); ++i) {
    CHECK(same.pixels()[i] == img.pixels()[i]);
  }
}

TEST_CASE("bicubic resize matches the independent direct-form reference") {
  ImagePlane ramp(16, 16);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) ramp.at(y, x) = (y * 16 + x) / 255.0;
  }
  for (auto [th, tw] : {std::pair{48, 48}, std::pair{23, 31}, std::pair{8, 40}}) {
    const ImagePlane ours = bicubic_resize(ramp, th, tw);
    const ImagePlane ref = testutil::bicubic_reference(ramp, th, tw);
    double max_err = 0.0;
    for (size_t i = 0; i < ours.pixels().size(); ++i) {
      max_err = std::max(max_err, std::fabs(ours.pixels()[i] - ref.pixels()[i]));
    }
    CHECK(max_err < 1e-9);
  }
  const ImagePlane natural = testutil::procedural_image(4, 24, 24);
  const ImagePlane ours = bicubic_resize(natural, 72, 60);
  const ImagePlane ref = testutil::bicubic_reference(natural, 72, 60);
  for (size_t i = 0; i < ours.pixels().size(); ++i) {
    CHECK(std::fabs(ours.pixels()[i] - ref.pixels()[i]) < 1e-9);
  }
}

TEST_CASE("bicubic resize validates target dimensions") {
  CHECK_THROWS_AS(bicubic_resize(ImagePlane(4, 4), 0, 4), std::invalid_argument);
}

TEST_CASE("degrading a constant image is lossless") {
  const TrainingPair pair = degrade(ImagePlane::constant(16, 16, 0.6), 2);
  for (size_t i = 0; i < pair.hr.pixels().size(); ++i) {
    CHECK(pair.lr.pixels()[i] == doctest::Approx(pair.hr.pixels()[i]).epsilon(1e-12));
  }
}

TEST_CASE("degrade crops to a multiple of the scale") {
  const TrainingPair pair = degrade(testutil::procedural_image(2, 31, 34), 3);
  CHECK(pair.hr.height() == 30);
  CHECK(pair.hr.width() == 33);
  CHECK(pair.lr.height() == 30);
  CHECK(pair.lr.width() == 33);
  CHECK(pair.scale_factor == 3);
}

TEST_CASE("degrading a checkerboard destroys measurable detail") {
  ImagePlane board(24, 24);
  for (int y = 0; y < 24; ++y) {
    for (int x = 0; x < 24; ++x) board.at(y, x) = ((y + x) % 2 == 0) ? 1.0 : 0.0;
  }
  const TrainingPair pair = degrade(board, 3);
  double mse = 0.0;
  for (size_t i = 0; i < pair.hr.pixels().size(); ++i) {
    mse += std::pow(pair.hr.pixels()[i] - pair.lr.pixels()[i], 2);
  }
  mse /= static_cast<double>(pair.hr.pixels().size());
  REQUIRE(mse > 0.0);
  const double psnr_db = 10.0 * std::log10(1.0 / mse);
  CHECK(std::isfinite(psnr_db));
  CHECK(psnr_db < 30.0);
}

TEST_CASE("degrading twice changes less than degrading once") {
  const ImagePlane hr = testutil::procedural_image(31, 48, 48);
  const TrainingPair first = degrade(hr, 3);
  const TrainingPair second = degrade(first.lr, 3);
  auto mse = [](const ImagePlane& a, const ImagePlane& b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.pixels().size(); ++i) {
      acc += std::pow(a.pixels()[i] - b.pixels()[i], 2);
    }
    return acc / static_cast<double>(a.pixels().size());
  };
  CHECK(mse(second.lr, first.lr) < mse(first.lr, first.hr));
}

TEST_CASE("augment emits the 12 variants") {
  const ImagePlane img = testutil::procedural_image(12, 40, 40);
  const auto variants = augment(img);
  CHECK(variants.size() == 12);
  for (const ImagePlane& v : variants) {
    CHECK(v.all_finite());
    CHECK(v.height() >= 1);
  }
}

TEST_CASE("180-degree rotation equals composed flips, exactly") {
  const ImagePlane img = testutil::procedural_image(13, 21, 17);
  const ImagePlane rotated = rotate_quarter(img, 2);
  const ImagePlane flipped = flip_horizontal(flip_vertical(img));
  for (size_t i = 0; i < img.pixels().size(); ++i) {
    CHECK(rotated.pixels()[i] == flipped.pixels()[i]);
  }
}

TEST_CASE("four quarter turns restore the image exactly") {
  const ImagePlane img = testutil::procedural_image(14, 19, 23);
  ImagePlane turned = img;
  for (int i = 0; i < 4; ++i) turned = rotate_quarter(turned, 1);
  REQUIRE(turned.height() == img.height());
  for (size_t i = 0; i < img.pixels().size(); ++i) {
    CHECK(turned.pixels()[i] == img.pixels()[i]);
  }
}

TEST_CASE("augmenting a constant image yields only constants") {
  const auto variants = augment(ImagePlane::constant(32, 32, 0.44));
  for (const ImagePlane& v : variants) {
    for (double p : v.pixels()) CHECK(p == doctest::Approx(0.44).epsilon(1e-12));
  }
}

TEST_CASE("45-degree rotation crops to the inscribed rectangle") {
  const ImagePlane img = testutil::procedural_image(15, 64, 64);
  const ImagePlane rotated = rotate_bicubic_cropped(img, 45.0);
  // Inscribed square of a 45-degree rotated square has side s/sqrt(2).
  CHECK(rotated.height() == 45);
  CHECK(rotated.width() == 45);
}

TEST_CASE("patch grid arithmetic: 64x64, patch 32, stride 16 gives 9") {
  const std::vector<ImagePlane> sources{testutil::procedural_image(16, 64, 64)};
  const auto pairs = extract_patches(sources, 32, 16, 2, 7);
  CHECK(pairs.size() == 9);
}

TEST_CASE("extract_patches is deterministic in its seed") {
  const std::vector<ImagePlane> sources{testutil::procedural_image(17, 64, 64),
                                        testutil::procedural_image(18, 48, 80)};
  const auto a = extract_patches(sources, 32, 16, 2, 99);
  const auto b = extract_patches(sources, 32, 16, 2, 99);
  const auto c = extract_patches(sources, 32, 16, 2, 100);
  REQUIRE(a.size() == b.size());
  bool same_order = true, c_differs = false;
  for (size_t i = 0; i < a.size(); ++i) {
    same_order = same_order && a[i].hr.pixels() == b[i].hr.pixels();
    c_differs = c_differs || a[i].hr.pixels() != c[i].hr.pixels();
  }
  CHECK(same_order);
  CHECK(c_differs);
}

TEST_CASE("every emitted pair satisfies the degradation invariant") {
  const std::vector<ImagePlane> sources{testutil::procedural_image(19, 48, 48)};
  const auto pairs = extract_patches(sources, 32, 16, 3, 1);
  REQUIRE(!pairs.empty());
  for (const TrainingPair& pair : pairs) {
    const TrainingPair again = degrade(pair.hr, pair.scale_factor);
    REQUIRE(again.lr.same_dims(pair.lr));
    for (size_t i = 0; i < pair.lr.pixels().size(); ++i) {
      CHECK(pair.lr.pixels()[i] == again.lr.pixels()[i]);
      CHECK(pair.lr.pixels()[i] >= 0.0);
      CHECK(pair.lr.pixels()[i] <= 1.0);
    }
  }
}

TEST_CASE("undersized sources are skipped, not fatal") {
  const std::vector<ImagePlane> sources{ImagePlane(8, 8),
                                        testutil::procedural_image(20, 32, 32)};
  const auto pairs = extract_patches(sources, 32, 16, 2, 0);
  CHECK(pairs.size() == 1);
  CHECK_THROWS_AS(extract_patches(sources, 8, 4, 2, 0), std::invalid_argument);
}

TEST_CASE("manifest parsing skips blanks and comments") {
  const auto dir = temp_dir("ttdsr_manifest_test");
  const auto path = dir / "list.txt";
  {
    std::ofstream os(path);
    os << "# comment\n\n  images/a.png  \nimages/b.bmp\n";
  }
  const auto entries = read_manifest(path.string());
  REQUIRE(entries.size() == 2);
  CHECK(entries[0] == "images/a.png");
  CHECK(entries[1] == "images/b.bmp");
  CHECK_THROWS(read_manifest((dir / "missing.txt").string()));
}

TEST_CASE("hash split is deterministic and roughly proportional") {
  std::vector<std::string> paths;
  for (int i = 0; i < 500; ++i) paths.push_back("img_" + std::to_string(i) + ".png");
  const DatasetSplit a = split_by_path_hash(paths, 10);
  const DatasetSplit b = split_by_path_hash(paths, 10);
  CHECK(a.train == b.train);
  CHECK(a.val == b.val);
  CHECK(a.train.size() + a.val.size() == paths.size());
  CHECK(a.val.size() > 20);
  CHECK(a.val.size() < 100);
}

TEST_CASE("grayscale PNG round trip is exact at 8 bits") {
  const auto dir = temp_dir("ttdsr_io_test");
  const auto path = dir / "gray.png";
  ImagePlane img(23, 31, kByteRange);
  ad::SplitMix64 rng(3);
  for (double& v : img.pixels()) v = static_cast<double>(rng.next_u64() % 256);
  write_png_gray(path.string(), img);

  const LoadedImage loaded = load_image(path.string());
  REQUIRE(loaded.is_gray);
  REQUIRE(loaded.gray.same_dims(img));
  for (size_t i = 0; i < img.pixels().size(); ++i) {
    CHECK(loaded.gray.pixels()[i] == img.pixels()[i]);
  }
}

TEST_CASE("RGB PNG round trip is exact") {
  const auto dir = temp_dir("ttdsr_io_test");
  const auto path = dir / "color.png";
  const RgbImage img = random_rgb(9, 20, 26);
  write_png_rgb(path.string(), img);
  const LoadedImage loaded = load_image(path.string());
  REQUIRE_FALSE(loaded.is_gray);
  CHECK(loaded.rgb.rgb == img.rgb);
}

TEST_CASE("BMP reader handles 24-bit bottom-up files") {
  const auto dir = temp_dir("ttdsr_io_test");
  const auto path = dir / "tiny.bmp";
  // 2x2 24-bit BMP, rows padded to 8 bytes, bottom-up:
  // bottom row = red, green; top row = blue, white.
  const unsigned char header[54] = {
      'B', 'M', 70, 0, 0, 0, 0, 0, 0, 0, 54, 0, 0, 0, 40, 0, 0, 0,
      2, 0, 0, 0, 2, 0, 0, 0, 1, 0, 24, 0, 0, 0, 0, 0, 16, 0, 0, 0,
      0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  const unsigned char rows[16] = {
      0, 0, 255, 0, 255, 0, 0, 0,        // bottom: red (BGR), green + pad
      255, 0, 0, 255, 255, 255, 0, 0};   // top: blue, white + pad
  {
    std::ofstream os(path, std::ios::binary);
    os.write(reinterpret_cast<const char*>(header), sizeof header);
    os.write(reinterpret_cast<const char*>(rows), sizeof rows);
  }
  const LoadedImage loaded = load_image(path.string());
  REQUIRE_FALSE(loaded.is_gray);
  REQUIRE(loaded.rgb.height == 2);
  REQUIRE(loaded.rgb.width == 2);
  const unsigned char* tl = loaded.rgb.pixel(0, 0);  // blue
  CHECK(tl[0] == 0);
  CHECK(tl[1] == 0);
  CHECK(tl[2] == 255);
  const unsigned char* bl = loaded.rgb.pixel(1, 0);  // red
  CHECK(bl[0] == 255);
  CHECK(bl[1] == 0);
  CHECK(bl[2] == 0);
}

TEST_CASE("unreadable or unknown files raise errors") {
  CHECK_THROWS(load_image("/nonexistent/path.png"));
  const auto dir = temp_dir("ttdsr_io_test");
  const auto path = dir / "not_an_image.txt";
  std::ofstream(path) << "plain text";
  CHECK_THROWS(load_image(path.string()));
}

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "testutil.hpp"
#include "ttdsr/image_io.hpp"
#include "ttdsr/network.hpp"
#include "ttdsr/ops.hpp"
#include "ttdsr/trainer.hpp"

using namespace ttdsr;
using ad::Tensor;

namespace {

const tcheb::TchebichefBasis& basis8() {
  static const tcheb::TchebichefBasis basis(8);
  return basis;
}

NetConfig tiny_config() {
  NetConfig config;
  config.split_point = 2;
  config.high_branch_width = 2;
  config.finetune_widths = {4, 4};
  config.seed = 17;
  return config;
}

Tensor batch_from_images(const std::vector<ImagePlane>& images) {
  const int h = images[0].height(), w = images[0].width();
  Tensor t = Tensor::zeros({static_cast<int>(images.size()), 1, h, w});
  auto data = t.data();
  for (size_t i = 0; i < images.size(); ++i) {
    std::copy(images[i].pixels().begin(), images[i].pixels().end(),
              data.begin() + i * images[i].pixels().size());
  }
  return t;
}

std::filesystem::path temp_path(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / "ttdsr_net_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("ITCL kernels equal the basis kernels exactly at initialization") {
  const TtdsrNetwork net(NetConfig{}, basis8());
  const auto itcl = net.itcl_kernels().data();
  const auto tcl = net.tcl_weights().data();
  const auto& kernels = basis8().kernels();
  for (int i = 0; i < 64; ++i) {
    for (int j = 0; j < 64; ++j) {
      CHECK(itcl[i * 64 + j] == kernels[i][j]);
      CHECK(tcl[i * 64 + j] == kernels[i][j]);
    }
  }
}

TEST_CASE("the same seed builds identical parameters") {
  NetConfig config;
  config.seed = 11;
  const TtdsrNetwork a(config, basis8());
  const TtdsrNetwork b(config, basis8());
  REQUIRE(a.parameters().size() == b.parameters().size());
  for (size_t i = 0; i < a.parameters().size(); ++i) {
    const auto pa = a.parameters()[i].data();
    const auto pb = b.parameters()[i].data();
    for (size_t j = 0; j < pa.size(); ++j) CHECK(pa[j] == pb[j]);
  }
}

TEST_CASE("default configuration lands in the expected parameter band") {
  const TtdsrNetwork net(NetConfig{}, basis8());
  const std::size_t count = net.trainable_parameter_count();
  CHECK(count >= 60000);
  CHECK(count <= 120000);
  MESSAGE("trainable parameters: ", count);
}

TEST_CASE("invalid configurations are rejected") {
  NetConfig bad_t;
  bad_t.split_point = 0;
  CHECK_THROWS_AS(TtdsrNetwork(bad_t, basis8()), std::invalid_argument);
  bad_t.split_point = 63;
  CHECK_THROWS_AS(TtdsrNetwork(bad_t, basis8()), std::invalid_argument);
  NetConfig bad_kernel;
  bad_kernel.high_kernel_sizes = {3, 4, 7};
  CHECK_THROWS_AS(TtdsrNetwork(bad_kernel, basis8()), std::invalid_argument);
  CHECK_THROWS_AS(TtdsrNetwork(NetConfig{}, tcheb::TchebichefBasis(4)),
                  std::invalid_argument);
}

TEST_CASE("forward preserves the batch shape and validates inputs") {
  const TtdsrNetwork net(tiny_config(), basis8());
  const Tensor input = Tensor::zeros({2, 1, 12, 9});
  CHECK(net.forward(input).shape() == ad::Shape{2, 1, 12, 9});
  CHECK_THROWS_AS(net.forward(Tensor::zeros({1, 1, 7, 16})), std::invalid_argument);
  CHECK_THROWS_AS(net.forward(Tensor::zeros({1, 2, 16, 16})), std::invalid_argument);
}

TEST_CASE("zero input produces the finite biases-only response") {
  const TtdsrNetwork net(tiny_config(), basis8());
  const Tensor out = net.forward(Tensor::zeros({1, 1, 10, 10}));
  CHECK(out.all_finite());
}

TEST_CASE("pass-through harness: the inverse layer undoes the forward layer inside") {
  NetConfig config = tiny_config();
  config.passthrough_paths = true;
  config.bypass_finetune = true;
  config.global_residual = false;
  const TtdsrNetwork net(config, basis8());

  const ImagePlane img = testutil::procedural_image(23, 24, 24);
  const Tensor out = net.forward(batch_from_images({img}));
  // Interior pixels (4 rows/cols clear of every border) are covered by all
  // 64 sliding windows, so the round trip is exact there.
  for (int y = 4; y < 20; ++y) {
    for (int x = 4; x < 20; ++x) {
      CHECK(std::fabs(out.data()[y * 24 + x] - img.at(y, x)) < 1e-6);
    }
  }
}

TEST_CASE("pass-through harness with the global residual doubles the interior") {
  NetConfig config = tiny_config();
  config.passthrough_paths = true;
  config.bypass_finetune = true;
  config.global_residual = true;
  const TtdsrNetwork net(config, basis8());
  const ImagePlane img = testutil::procedural_image(29, 16, 16);
  const Tensor out = net.forward(batch_from_images({img}));
  for (int y = 4; y < 12; ++y) {
    for (int x = 4; x < 12; ++x) {
      CHECK(out.data()[y * 16 + x] == doctest::Approx(2.0 * img.at(y, x)).epsilon(1e-6));
    }
  }
}

TEST_CASE("harness training step equals a direct loss evaluation") {
  NetConfig config = tiny_config();
  config.passthrough_paths = true;
  config.bypass_finetune = true;
  config.global_residual = false;
  TtdsrNetwork net(config, basis8());

  const ImagePlane img = testutil::procedural_image(31, 20, 20);
  const Tensor batch = batch_from_images({img});

  // Oracle: run the forward pass and evaluate the training objective
  // directly from its definition.
  const Tensor pred = net.forward(batch);
  double expected = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    expected += std::pow(pred.data()[i] - batch.data()[i], 2);
  }
  const double lambda = 0.01;
  double reg = 0.0;
  for (const Tensor& w : net.regularized_weights()) {
    for (double v : w.data()) reg += v * v;
  }
  expected += lambda * reg;

  ad::AdamState adam(net.parameters());
  const double loss = net.training_step(batch, batch, adam, lambda);
  CHECK(loss == doctest::Approx(expected).epsilon(1e-12));

  // The error is confined to the boundary band: interior residuals vanish.
  for (int y = 4; y < 16; ++y) {
    for (int x = 4; x < 16; ++x) {
      CHECK(std::fabs(pred.data()[y * 20 + x] - batch.data()[y * 20 + x]) < 1e-9);
    }
  }
}

TEST_CASE("training step with lambda 0 and pred == target gives exactly zero") {
  NetConfig config = tiny_config();
  TtdsrNetwork net(config, basis8());
  const ImagePlane img = testutil::procedural_image(37, 16, 16);
  const Tensor lr = batch_from_images({img});
  // Use the network's own output as the target: same parameters, so the
  // data term vanishes identically.
  const Tensor pred = net.forward(lr);
  Tensor target = Tensor::zeros(pred.shape());
  std::copy(pred.data().begin(), pred.data().end(), target.data().begin());

  ad::AdamState adam(net.parameters());
  CHECK(net.training_step(lr, target, adam, 0.0) == 0.0);
}

TEST_CASE("training step rejects mismatched batches") {
  TtdsrNetwork net(tiny_config(), basis8());
  ad::AdamState adam(net.parameters());
  CHECK_THROWS_AS(
      net.training_step(Tensor::zeros({1, 1, 16, 16}), Tensor::zeros({1, 1, 16, 15}),
                        adam, 0.01),
      std::invalid_argument);
}

TEST_CASE("twenty steps on a fixed small batch reduce the loss") {
  NetConfig config;
  config.seed = 5;
  TtdsrNetwork net(config, basis8());

  std::vector<ImagePlane> lr_images, hr_images;
  for (int i = 0; i < 16; ++i) {
    const ImagePlane hr = testutil::procedural_image(500 + i, 24, 24);
    const TrainingPair pair = degrade(hr, 3);
    lr_images.push_back(pair.lr);
    hr_images.push_back(pair.hr);
  }
  const Tensor lr = batch_from_images(lr_images);
  const Tensor hr = batch_from_images(hr_images);

  ad::AdamState adam(net.parameters());
  double first = 0.0, last = 0.0;
  for (int step = 0; step < 20; ++step) {
    last = net.training_step(lr, hr, adam, 0.01);
    if (step == 0) first = last;
  }
  CHECK(last < first);
}

TEST_CASE("TCL stays bitwise frozen while ITCL kernels move") {
  NetConfig config = tiny_config();
  TtdsrNetwork net(config, basis8());
  const std::vector<double> tcl_before(net.tcl_weights().data().begin(),
                                       net.tcl_weights().data().end());
  const std::vector<double> itcl_before(net.itcl_kernels().data().begin(),
                                        net.itcl_kernels().data().end());

  const ImagePlane hr = testutil::procedural_image(61, 20, 20);
  const TrainingPair pair = degrade(hr, 2);
  const Tensor lr_batch = batch_from_images({pair.lr});
  const Tensor hr_batch = batch_from_images({pair.hr});
  ad::AdamState adam(net.parameters());
  for (int i = 0; i < 3; ++i) net.training_step(lr_batch, hr_batch, adam, 0.01);

  bool tcl_same = true, itcl_changed = false;
  for (size_t i = 0; i < tcl_before.size(); ++i) {
    tcl_same = tcl_same && net.tcl_weights().data()[i] == tcl_before[i];
    itcl_changed = itcl_changed || net.itcl_kernels().data()[i] != itcl_before[i];
  }
  CHECK(tcl_same);
  CHECK(itcl_changed);
}

TEST_CASE("disabling the local residual changes the output") {
  NetConfig with_config;
  with_config.seed = 7;
  NetConfig without_config = with_config;
  without_config.local_residual = false;
  const TtdsrNetwork with_net(with_config, basis8());
  const TtdsrNetwork without_net(without_config, basis8());

  const Tensor input = batch_from_images({testutil::procedural_image(71, 16, 16)});
  const Tensor a = with_net.forward(input);
  const Tensor b = without_net.forward(input);
  bool differs = false;
  for (size_t i = 0; i < a.size(); ++i) differs = differs || a.data()[i] != b.data()[i];
  CHECK(differs);
}

TEST_CASE("end-to-end gradients match finite differences on a tiny model") {
  NetConfig config = tiny_config();
  TtdsrNetwork net(config, basis8());
  const ImagePlane hr = testutil::procedural_image(83, 8, 8);
  const TrainingPair pair = degrade(hr, 2);
  const Tensor lr_batch = batch_from_images({pair.lr});
  const Tensor hr_batch = batch_from_images({pair.hr});

  auto make_loss = [&] {
    return ad::add(ad::mse_loss(net.forward(lr_batch), hr_batch),
                   ad::l2_penalty(net.regularized_weights(), 0.01));
  };
  // Subsampled sweep here; the acceptance suite runs the full one.
  CHECK(testutil::max_fd_rel_error(make_loss, net.parameters(), 1e-5, 40) < 1e-3);
}

TEST_CASE("super_resolve honors the shape contract and value range") {
  TtdsrNetwork net(tiny_config(), basis8());
  ImagePlane lr(11, 13, kByteRange);
  ad::SplitMix64 rng(5);
  for (double& v : lr.pixels()) v = static_cast<double>(rng.next_u64() % 256);

  for (int scale : {2, 3, 4}) {
    const ImagePlane sr = net.super_resolve(lr, scale);
    CHECK(sr.height() == lr.height() * scale);
    CHECK(sr.width() == lr.width() * scale);
    CHECK(sr.all_finite());
    for (double v : sr.pixels()) {
      CHECK(v >= 0.0);
      CHECK(v <= 255.0);
    }
  }
  CHECK_THROWS_AS(net.super_resolve(lr, 5), std::invalid_argument);
  CHECK_THROWS_AS(net.super_resolve(lr, 1), std::invalid_argument);
}

TEST_CASE("super_resolve refuses non-finite parameters") {
  TtdsrNetwork net(tiny_config(), basis8());
  net.parameters()[0].data()[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(net.super_resolve(ImagePlane(8, 8), 2), std::runtime_error);
}

TEST_CASE("checkpoint round trip preserves parameters and configuration") {
  NetConfig config;
  config.seed = 19;
  config.split_point = 7;
  config.local_residual = false;
  TtdsrNetwork net(config, basis8());
  const auto path = temp_path("roundtrip.ckpt");
  net.save(path.string());

  const TtdsrNetwork loaded = TtdsrNetwork::load(path.string());
  CHECK(loaded.config().split_point == 7);
  CHECK(loaded.config().local_residual == false);
  CHECK(loaded.config().seed == 19);
  REQUIRE(loaded.parameters().size() == net.parameters().size());
  for (size_t i = 0; i < net.parameters().size(); ++i) {
    const auto a = net.parameters()[i].data();
    const auto b = loaded.parameters()[i].data();
    REQUIRE(a.size() == b.size());
    for (size_t j = 0; j < a.size(); ++j) CHECK(a[j] == b[j]);
  }
}

TEST_CASE("identical seeds produce byte-identical checkpoints") {
  NetConfig config;
  config.seed = 23;
  const auto path_a = temp_path("seed_a.ckpt");
  const auto path_b = temp_path("seed_b.ckpt");
  TtdsrNetwork(config, basis8()).save(path_a.string());
  TtdsrNetwork(config, basis8()).save(path_b.string());

  std::ifstream fa(path_a, std::ios::binary), fb(path_b, std::ios::binary);
  const std::string bytes_a((std::istreambuf_iterator<char>(fa)), {});
  const std::string bytes_b((std::istreambuf_iterator<char>(fb)), {});
  CHECK(bytes_a == bytes_b);
  CHECK(!bytes_a.empty());
}

TEST_CASE("kernel grid export writes the 64-tile image") {
  TtdsrNetwork net(tiny_config(), basis8());
  const auto path = temp_path("kernels.png");
  net.export_kernel_grid(path.string());
  const LoadedImage img = load_image(path.string());
  REQUIRE(img.is_gray);
  CHECK(img.gray.height() == 71);  // 8 tiles of 8px + 7 separators
  CHECK(img.gray.width() == 71);
}

TEST_CASE("trainer runs epochs deterministically") {
  std::vector<ImagePlane> sources{testutil::procedural_image(301, 48, 48)};
  TrainSettings settings;
  settings.epochs = 2;
  settings.batch_size = 8;
  settings.scale = 2;
  settings.limit_patches = 16;
  settings.seed = 3;

  const auto pairs = build_training_set(sources, settings);
  REQUIRE(pairs.size() == 16);

  auto run = [&] {
    NetConfig config = tiny_config();
    config.seed = settings.seed;
    TtdsrNetwork net(config, basis8());
    return train_network(net, pairs, settings);
  };
  const TrainResult a = run();
  const TrainResult b = run();
  REQUIRE(a.epochs.size() == 2);
  for (size_t i = 0; i < a.epochs.size(); ++i) {
    CHECK(a.epochs[i].mean_loss == b.epochs[i].mean_loss);
  }
}

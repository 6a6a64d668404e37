#include "ttdsr/network.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ttdsr/data.hpp"
#include "ttdsr/image_io.hpp"
#include "ttdsr/ops.hpp"

namespace ttdsr {

using ad::PadMode;
using ad::Tensor;

void NetConfig::validate() const {
  if (split_point < 1 || split_point > 62) {
    throw std::invalid_argument("NetConfig: split_point must be in [1, 62]");
  }
  if (leaky_alpha < 0.0 || leaky_alpha >= 1.0) {
    throw std::invalid_argument("NetConfig: leaky_alpha must be in [0, 1)");
  }
  if (high_branch_width < 1) {
    throw std::invalid_argument("NetConfig: high_branch_width must be >= 1");
  }
  for (int k : high_kernel_sizes) {
    if (k < 1 || k % 2 == 0) {
      throw std::invalid_argument("NetConfig: high-path kernel sizes must be odd");
    }
  }
  for (int w : finetune_widths) {
    if (w < 1) throw std::invalid_argument("NetConfig: finetune widths must be >= 1");
  }
}

TtdsrNetwork::TtdsrNetwork(const NetConfig& config, const tcheb::TchebichefBasis& basis)
    : config_(config) {
  config_.validate();
  if (basis.n_points() != tcheb::kKernelSize) {
    throw std::invalid_argument("TtdsrNetwork: basis must have n_points == 8");
  }
  build(basis);
}

void TtdsrNetwork::build(const tcheb::TchebichefBasis& basis) {
  const int T = config_.split_point;
  const int low_ch = T + 1;
  const int high_ch = 63 - T;
  const int bw = config_.high_branch_width;

  // Sub-seed stream so every tensor gets an independent deterministic seed.
  ad::SplitMix64 seeds(config_.seed);
  auto conv = [&](int out_ch, int in_ch, int k) {
    ConvLayer layer;
    layer.weight = Tensor::glorot_uniform({out_ch, in_ch, k, k}, seeds.next_u64());
    layer.bias = Tensor::zeros({out_ch}, /*requires_grad=*/true);
    return layer;
  };

  low1_ = conv(low_ch, low_ch, 5);
  low2_ = conv(low_ch, low_ch, 1);
  for (int i = 0; i < 3; ++i) {
    branch_[i] = conv(bw, high_ch, config_.high_kernel_sizes[i]);
  }
  fuse_ = conv(high_ch, 3 * bw, 1);
  finetune_[0] = conv(config_.finetune_widths[0], 1, 3);
  finetune_[1] = conv(config_.finetune_widths[1], config_.finetune_widths[0], 3);
  finetune_[2] = conv(1, config_.finetune_widths[1], 3);

  // Channel bookkeeping: the two paths must hand back exactly the 64
  // zig-zag channels they consumed.
  if (low2_.weight.dim(0) != low_ch || fuse_.weight.dim(0) != high_ch ||
      low_ch + high_ch != tcheb::kNumKernels) {
    throw std::logic_error("TtdsrNetwork: path widths do not recombine to 64 channels");
  }

  const auto& kernels = basis.kernels();
  tcl_weights_ = Tensor::zeros({tcheb::kNumKernels, 1, 8, 8});
  itcl_kernels_ = Tensor::zeros({1, tcheb::kNumKernels, 8, 8}, /*requires_grad=*/true);
  auto tcl_data = tcl_weights_.data();
  auto itcl_data = itcl_kernels_.data();
  for (int i = 0; i < tcheb::kNumKernels; ++i) {
    for (int j = 0; j < 64; ++j) {
      tcl_data[static_cast<size_t>(i) * 64 + j] = kernels[i][j];
      itcl_data[static_cast<size_t>(i) * 64 + j] = kernels[i][j];
    }
  }

  collect_params();
}

void TtdsrNetwork::collect_params() {
  params_.clear();
  for (ConvLayer* layer : {&low1_, &low2_, &branch_[0], &branch_[1], &branch_[2], &fuse_,
                           &finetune_[0], &finetune_[1], &finetune_[2]}) {
    params_.push_back(layer->weight);
    params_.push_back(layer->bias);
  }
  params_.push_back(itcl_kernels_);
}

Tensor TtdsrNetwork::forward(const Tensor& lr_batch) const {
  if (!lr_batch.valid() || lr_batch.shape().size() != 4 || lr_batch.dim(1) != 1) {
    throw std::invalid_argument("forward: expected a batch x 1 x H x W tensor");
  }
  if (lr_batch.dim(2) < 8 || lr_batch.dim(3) < 8) {
    throw std::invalid_argument("forward: spatial dimensions must be >= 8");
  }
  const double alpha = config_.leaky_alpha;
  const int T = config_.split_point;

  const Tensor cube = ad::conv2d(lr_batch, tcl_weights_, {}, 1, PadMode::kSame,
                                 /*trainable=*/false);

  Tensor z_low, z_high;
  if (config_.passthrough_paths) {
    z_low = ad::slice_channels(cube, 0, T + 1);
    z_high = ad::slice_channels(cube, T + 1, tcheb::kNumKernels);
  } else {
    const Tensor f_low = ad::slice_channels(cube, 0, T + 1);
    const Tensor f_high = ad::slice_channels(cube, T + 1, tcheb::kNumKernels);

    Tensor l = ad::leaky_relu(
        ad::conv2d(f_low, low1_.weight, low1_.bias, 1, PadMode::kSame), alpha);
    z_low = ad::leaky_relu(
        ad::conv2d(l, low2_.weight, low2_.bias, 1, PadMode::kSame), alpha);

    std::vector<Tensor> branches;
    branches.reserve(3);
    for (int i = 0; i < 3; ++i) {
      branches.push_back(ad::leaky_relu(
          ad::conv2d(f_high, branch_[i].weight, branch_[i].bias, 1, PadMode::kSame),
          alpha));
    }
    const Tensor fused = ad::conv2d(ad::concat_channels(branches), fuse_.weight,
                                    fuse_.bias, 1, PadMode::kSame);
    z_high = config_.local_residual ? ad::add(fused, f_high) : fused;
  }

  const Tensor recombined = ad::concat_channels({z_low, z_high});
  const Tensor reconstructed =
      ad::scale(ad::conv2d(recombined, itcl_kernels_, {}, 1, PadMode::kSame,
                           /*trainable=*/true, /*flip_kernels=*/true),
                1.0 / tcheb::kNumKernels);

  Tensor out = reconstructed;
  if (!config_.bypass_finetune) {
    Tensor f = ad::leaky_relu(
        ad::conv2d(out, finetune_[0].weight, finetune_[0].bias, 1, PadMode::kSame), alpha);
    f = ad::leaky_relu(
        ad::conv2d(f, finetune_[1].weight, finetune_[1].bias, 1, PadMode::kSame), alpha);
    out = ad::conv2d(f, finetune_[2].weight, finetune_[2].bias, 1, PadMode::kSame);
  }
  if (config_.global_residual) {
    out = ad::add(out, lr_batch);
  }
  return out;
}

std::vector<Tensor> TtdsrNetwork::regularized_weights() const {
  std::vector<Tensor> weights;
  for (const ConvLayer* layer : {&low1_, &low2_, &branch_[0], &branch_[1], &branch_[2],
                                 &fuse_, &finetune_[0], &finetune_[1], &finetune_[2]}) {
    weights.push_back(layer->weight);
  }
  return weights;
}

double TtdsrNetwork::training_step(const Tensor& lr_batch, const Tensor& hr_batch,
                                   ad::AdamState& adam, double lambda) {
  if (lr_batch.shape() != hr_batch.shape()) {
    throw std::invalid_argument("training_step: batch shapes differ");
  }
  const Tensor pred = forward(lr_batch);
  const Tensor data_term = ad::mse_loss(pred, hr_batch);
  const Tensor loss = ad::add(data_term, ad::l2_penalty(regularized_weights(), lambda));
  const double value = loss.value();
  if (!std::isfinite(value)) {
    throw DivergedError("training_step: loss is not finite; aborting the run");
  }
  loss.backward();
  // Parameters that a harness configuration keeps out of the graph still
  // take part in the optimizer step, with zero gradient.
  for (Tensor& p : params_) p.ensure_grad();
  adam.step(params_);
  for (Tensor& p : params_) p.zero_grad();
  return value;
}

ImagePlane TtdsrNetwork::super_resolve(const ImagePlane& lr_image, int scale) const {
  if (scale < 2 || scale > 4) {
    throw std::invalid_argument("super_resolve: scale must be 2, 3 or 4");
  }
  for (const Tensor& p : params_) {
    if (!p.all_finite()) {
      throw std::runtime_error("super_resolve: model parameters are not finite");
    }
  }
  const ImagePlane unit = lr_image.to_unit_range();
  const int oh = unit.height() * scale;
  const int ow = unit.width() * scale;
  ImagePlane up = bicubic_resize(unit, oh, ow);
  if (oh < 8 || ow < 8) {
    throw std::invalid_argument("super_resolve: upscaled image smaller than 8x8");
  }

  Tensor input = Tensor::from({1, 1, oh, ow}, up.pixels());
  const Tensor output = forward(input);

  ImagePlane result(oh, ow, kUnitRange);
  auto out_data = output.data();
  std::copy(out_data.begin(), out_data.end(), result.pixels().begin());
  result.clamp_to_range();
  ImagePlane rescaled = result.to_range(lr_image.value_range());
  rescaled.clamp_to_range();
  return rescaled;
}

std::size_t TtdsrNetwork::trainable_parameter_count() const {
  std::size_t count = 0;
  for (const Tensor& p : params_) count += p.size();
  return count;
}

namespace {

const char* const kParamNames[] = {
    "low1.weight",     "low1.bias",     "low2.weight",     "low2.bias",
    "high3.weight",    "high3.bias",    "high5.weight",    "high5.bias",
    "high7.weight",    "high7.bias",    "fuse.weight",     "fuse.bias",
    "finetune1.weight", "finetune1.bias", "finetune2.weight", "finetune2.bias",
    "finetune3.weight", "finetune3.bias", "itcl.kernels",
};

std::string config_to_meta(const NetConfig& c) {
  std::ostringstream os;
  os << "format=ttdsr-net\n";
  os << "split_point=" << c.split_point << '\n';
  os << "leaky_alpha=" << c.leaky_alpha << '\n';
  os << "high_branch_width=" << c.high_branch_width << '\n';
  os << "high_kernel_sizes=" << c.high_kernel_sizes[0] << ',' << c.high_kernel_sizes[1]
     << ',' << c.high_kernel_sizes[2] << '\n';
  os << "finetune_widths=" << c.finetune_widths[0] << ',' << c.finetune_widths[1] << '\n';
  os << "local_residual=" << (c.local_residual ? 1 : 0) << '\n';
  os << "global_residual=" << (c.global_residual ? 1 : 0) << '\n';
  os << "seed=" << c.seed << '\n';
  return os.str();
}

NetConfig config_from_meta(const std::string& meta) {
  std::map<std::string, std::string> kv;
  std::istringstream is(meta);
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  if (kv["format"] != "ttdsr-net") {
    throw std::runtime_error("checkpoint metadata is not a ttdsr-net config");
  }
  NetConfig c;
  c.split_point = std::stoi(kv.at("split_point"));
  c.leaky_alpha = std::stod(kv.at("leaky_alpha"));
  c.high_branch_width = std::stoi(kv.at("high_branch_width"));
  std::sscanf(kv.at("high_kernel_sizes").c_str(), "%d,%d,%d", &c.high_kernel_sizes[0],
              &c.high_kernel_sizes[1], &c.high_kernel_sizes[2]);
  std::sscanf(kv.at("finetune_widths").c_str(), "%d,%d", &c.finetune_widths[0],
              &c.finetune_widths[1]);
  c.local_residual = kv.at("local_residual") == "1";
  c.global_residual = kv.at("global_residual") == "1";
  c.seed = std::stoull(kv.at("seed"));
  return c;
}

}  // namespace

std::vector<ad::NamedTensor> TtdsrNetwork::named_parameters() const {
  std::vector<ad::NamedTensor> named;
  named.reserve(params_.size());
  for (size_t i = 0; i < params_.size(); ++i) {
    const auto data = params_[i].data();
    named.push_back({kParamNames[i], params_[i].shape(),
                     std::vector<double>(data.begin(), data.end())});
  }
  return named;
}

void TtdsrNetwork::save(const std::string& path) const {
  ad::Checkpoint ckpt;
  ckpt.meta_json = config_to_meta(config_);
  ckpt.tensors = named_parameters();
  ad::save_checkpoint(path, ckpt);
}

TtdsrNetwork TtdsrNetwork::load(const std::string& path) {
  const ad::Checkpoint ckpt = ad::load_checkpoint(path);
  const NetConfig config = config_from_meta(ckpt.meta_json);
  const tcheb::TchebichefBasis basis(tcheb::kKernelSize);
  TtdsrNetwork net(config, basis);

  std::map<std::string, const ad::NamedTensor*> by_name;
  for (const auto& t : ckpt.tensors) by_name[t.name] = &t;
  for (size_t i = 0; i < net.params_.size(); ++i) {
    const auto it = by_name.find(kParamNames[i]);
    if (it == by_name.end()) {
      throw std::runtime_error(std::string("checkpoint is missing parameter ") +
                               kParamNames[i]);
    }
    if (it->second->shape != net.params_[i].shape()) {
      throw std::runtime_error(std::string("checkpoint shape mismatch for ") +
                               kParamNames[i]);
    }
    auto dst = net.params_[i].data();
    std::copy(it->second->data.begin(), it->second->data.end(), dst.begin());
  }
  return net;
}

void TtdsrNetwork::export_kernel_grid(const std::string& png_path) const {
  constexpr int tiles = 8, k = 8, sep = 1;
  constexpr int dim = tiles * k + (tiles - 1) * sep;
  ImagePlane grid(dim, dim, kByteRange);
  const auto data = itcl_kernels_.data();
  for (int i = 0; i < tcheb::kNumKernels; ++i) {
    const double* kernel = data.data() + static_cast<size_t>(i) * k * k;
    double lo = kernel[0], hi = kernel[0];
    for (int j = 1; j < k * k; ++j) {
      lo = std::min(lo, kernel[j]);
      hi = std::max(hi, kernel[j]);
    }
    const double span = hi - lo;
    const int ty = (i / tiles) * (k + sep);
    const int tx = (i % tiles) * (k + sep);
    for (int u = 0; u < k; ++u) {
      for (int v = 0; v < k; ++v) {
        const double val = kernel[u * k + v];
        grid.at(ty + u, tx + v) = span > 0.0 ? 255.0 * (val - lo) / span : 127.0;
      }
    }
  }
  write_png_gray(png_path, grid);
}

}  // namespace ttdsr

#pragma once

#include <vector>

#include "ttdsr/tensor.hpp"

namespace ttdsr::ad {

enum class PadMode {
  kValid,  // no padding
  kSame,   // output keeps the input's spatial size at stride 1
};

/// 2-D cross-correlation plus optional bias.
///
/// input    batch x in_ch x H x W
/// weights  out_ch x in_ch x kh x kw
/// bias     {out_ch}, or an empty (default-constructed) Tensor for none
///
/// kSame puts (k-1)/2 zeros before and the remainder after, so an even
/// kernel pads 3 before / 4 after. With flip_kernels the stored kernel is
/// applied rotated by 180 degrees and the same-padding split mirrors to
/// 4 before / 3 after; that orientation makes the op the exact adjoint of
/// the unflipped one, which is what an inverse transform layer needs.
///
/// trainable=false skips weight/bias gradient accumulation entirely while
/// still propagating gradients to the input.
Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias,
              int stride, PadMode padding, bool trainable = true,
              bool flip_kernels = false);

/// Elementwise max(x, alpha*x), alpha in [0,1).
Tensor leaky_relu(const Tensor& input, double alpha);

/// Stack along the channel dimension; inputs agree on batch/height/width.
Tensor concat_channels(const std::vector<Tensor>& inputs);

/// Channels [begin, end) of a batch x C x H x W tensor.
Tensor slice_channels(const Tensor& input, int begin, int end);

Tensor add(const Tensor& a, const Tensor& b);

/// Multiply by a compile-time-fixed constant.
Tensor scale(const Tensor& input, double factor);

/// (1/M) * sum((pred - target)^2) with M = batch size (dim 0). This is the
/// batch-averaged squared L2 norm, not a per-element mean.
Tensor mse_loss(const Tensor& pred, const Tensor& target);

/// lambda * sum over all listed tensors of the squared entries.
Tensor l2_penalty(const std::vector<Tensor>& weights, double lambda);

}  // namespace ttdsr::ad

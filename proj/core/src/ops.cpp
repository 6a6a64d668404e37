#include "ttdsr/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace ttdsr::ad {

namespace {

using detail::Node;
using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMajorMap = Eigen::Map<const RowMajorMatrix>;
using ConstMap = Eigen::Map<const Eigen::MatrixXd>;
using MutableMap = Eigen::Map<Eigen::MatrixXd>;

// A node wants gradient if it is a parameter leaf or an op output that
// still has to propagate further.
bool wants_grad(const Node& n) { return n.requires_grad || n.backward_fn != nullptr; }

Tensor make_op_node(Shape shape, std::vector<std::shared_ptr<Node>> parents,
                    std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->data.assign(numel(shape), 0.0);
  node->shape = std::move(shape);
  node->parents = std::move(parents);
  node->backward_fn = std::move(backward_fn);
  return Tensor::wrap(std::move(node));
}

struct ConvGeometry {
  int batch, in_ch, in_h, in_w;
  int out_ch, kh, kw;
  int stride;
  int pad_top, pad_left;
  int out_h, out_w;
  bool flip;

  std::size_t patch_rows() const {
    return static_cast<std::size_t>(in_ch) * kh * kw;
  }
  std::size_t out_spatial() const {
    return static_cast<std::size_t>(out_h) * out_w;
  }
};

ConvGeometry resolve_geometry(const Shape& in, const Shape& w, int stride,
                              PadMode padding, bool flip) {
  ConvGeometry g{};
  g.batch = in[0];
  g.in_ch = in[1];
  g.in_h = in[2];
  g.in_w = in[3];
  g.out_ch = w[0];
  g.kh = w[2];
  g.kw = w[3];
  g.stride = stride;
  g.flip = flip;
  if (padding == PadMode::kSame) {
    g.pad_top = flip ? g.kh - 1 - (g.kh - 1) / 2 : (g.kh - 1) / 2;
    g.pad_left = flip ? g.kw - 1 - (g.kw - 1) / 2 : (g.kw - 1) / 2;
  } else {
    g.pad_top = 0;
    g.pad_left = 0;
  }
  const int pad_total_h = padding == PadMode::kSame ? g.kh - 1 : 0;
  const int pad_total_w = padding == PadMode::kSame ? g.kw - 1 : 0;
  g.out_h = (g.in_h + pad_total_h - g.kh) / stride + 1;
  g.out_w = (g.in_w + pad_total_w - g.kw) / stride + 1;
  if (g.out_h < 1 || g.out_w < 1) {
    throw std::invalid_argument("conv2d: kernel larger than padded input");
  }
  return g;
}

// Patch matrix of one image: rows = in_ch*kh*kw, cols = out_h*out_w,
// zeros where the window leaves the padded input.
void im2col(const double* img, const ConvGeometry& g, Eigen::MatrixXd& cols) {
  const std::size_t plane = static_cast<std::size_t>(g.in_h) * g.in_w;
  cols.resize(static_cast<Eigen::Index>(g.patch_rows()),
              static_cast<Eigen::Index>(g.out_spatial()));
  for (int oy = 0; oy < g.out_h; ++oy) {
    for (int ox = 0; ox < g.out_w; ++ox) {
      double* col = cols.data() +
                    (static_cast<std::size_t>(oy) * g.out_w + ox) * g.patch_rows();
      std::size_t r = 0;
      for (int c = 0; c < g.in_ch; ++c) {
        const double* src = img + static_cast<std::size_t>(c) * plane;
        for (int u = 0; u < g.kh; ++u) {
          const int sy = oy * g.stride + u - g.pad_top;
          if (sy < 0 || sy >= g.in_h) {
            for (int v = 0; v < g.kw; ++v) col[r++] = 0.0;
            continue;
          }
          for (int v = 0; v < g.kw; ++v) {
            const int sx = ox * g.stride + v - g.pad_left;
            col[r++] = (sx < 0 || sx >= g.in_w)
                           ? 0.0
                           : src[static_cast<std::size_t>(sy) * g.in_w + sx];
          }
        }
      }
    }
  }
}

// Scatter-add of a patch matrix back onto one image's gradient.
void col2im_add(const Eigen::MatrixXd& cols, const ConvGeometry& g, double* img_grad) {
  const std::size_t plane = static_cast<std::size_t>(g.in_h) * g.in_w;
  for (int oy = 0; oy < g.out_h; ++oy) {
    for (int ox = 0; ox < g.out_w; ++ox) {
      const double* col = cols.data() +
                          (static_cast<std::size_t>(oy) * g.out_w + ox) * g.patch_rows();
      std::size_t r = 0;
      for (int c = 0; c < g.in_ch; ++c) {
        double* dst = img_grad + static_cast<std::size_t>(c) * plane;
        for (int u = 0; u < g.kh; ++u) {
          const int sy = oy * g.stride + u - g.pad_top;
          if (sy < 0 || sy >= g.in_h) {
            r += g.kw;
            continue;
          }
          for (int v = 0; v < g.kw; ++v) {
            const int sx = ox * g.stride + v - g.pad_left;
            if (sx >= 0 && sx < g.in_w) {
              dst[static_cast<std::size_t>(sy) * g.in_w + sx] += col[r];
            }
            ++r;
          }
        }
      }
    }
  }
}

// Weights as a GEMM-ready out_ch x (in_ch*kh*kw) matrix, 180-degree
// rotated when the geometry says so.
Eigen::MatrixXd weight_matrix(const std::vector<double>& w, const ConvGeometry& g) {
  Eigen::MatrixXd m(g.out_ch, static_cast<Eigen::Index>(g.patch_rows()));
  const std::size_t ksize = static_cast<std::size_t>(g.kh) * g.kw;
  for (int oc = 0; oc < g.out_ch; ++oc) {
    for (int c = 0; c < g.in_ch; ++c) {
      const double* src = w.data() + (static_cast<std::size_t>(oc) * g.in_ch + c) * ksize;
      for (int u = 0; u < g.kh; ++u) {
        for (int v = 0; v < g.kw; ++v) {
          const int su = g.flip ? g.kh - 1 - u : u;
          const int sv = g.flip ? g.kw - 1 - v : v;
          m(oc, static_cast<Eigen::Index>((static_cast<std::size_t>(c) * g.kh + u) * g.kw + v)) =
              src[static_cast<std::size_t>(su) * g.kw + sv];
        }
      }
    }
  }
  return m;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias,
              int stride, PadMode padding, bool trainable, bool flip_kernels) {
  if (!input.valid() || !weights.valid()) {
    throw std::invalid_argument("conv2d: input and weights are required");
  }
  if (input.shape().size() != 4 || weights.shape().size() != 4) {
    throw std::invalid_argument("conv2d: input and weights must be 4-d");
  }
  if (weights.dim(1) != input.dim(1)) {
    throw std::invalid_argument("conv2d: weight in_ch does not match input channels");
  }
  if (bias.valid() && (bias.shape().size() != 1 || bias.dim(0) != weights.dim(0))) {
    throw std::invalid_argument("conv2d: bias must have shape {out_ch}");
  }
  if (stride < 1) throw std::invalid_argument("conv2d: stride must be positive");

  const ConvGeometry g =
      resolve_geometry(input.shape(), weights.shape(), stride, padding, flip_kernels);

  std::vector<std::shared_ptr<Node>> parents{input.node(), weights.node()};
  if (bias.valid()) parents.push_back(bias.node());

  Tensor out = make_op_node({g.batch, g.out_ch, g.out_h, g.out_w}, std::move(parents), {});

  const Eigen::MatrixXd wmat = weight_matrix(weights.node()->data, g);
  const std::size_t in_image = static_cast<std::size_t>(g.in_ch) * g.in_h * g.in_w;
  const std::size_t out_image = static_cast<std::size_t>(g.out_ch) * g.out_spatial();

  {
    const double* in_data = input.node()->data.data();
    double* out_data = out.node()->data.data();
    const double* bias_data = bias.valid() ? bias.node()->data.data() : nullptr;
#pragma omp parallel for schedule(static)
    for (int b = 0; b < g.batch; ++b) {
      Eigen::MatrixXd cols;
      im2col(in_data + b * in_image, g, cols);
      MutableMap out_map(out_data + b * out_image,
                         static_cast<Eigen::Index>(g.out_spatial()), g.out_ch);
      out_map.noalias() = cols.transpose() * wmat.transpose();
      if (bias_data) {
        for (int oc = 0; oc < g.out_ch; ++oc) out_map.col(oc).array() += bias_data[oc];
      }
    }
  }

  // Backward: d_input = W^T * d_out (via col2im), d_W = sum_b d_out_b * cols_b^T,
  // d_bias = sum of d_out per channel. Per-image weight contributions are
  // reduced serially in batch order so results do not depend on thread count.
  auto in_node = input.node();
  auto w_node = weights.node();
  auto b_node = bias.valid() ? bias.node() : nullptr;
  out.node()->backward_fn = [g, wmat, in_node, w_node, b_node, trainable,
                             in_image, out_image](Node& self) {
    const bool need_dinput = wants_grad(*in_node);
    const bool need_dw = trainable && wants_grad(*w_node);
    const bool need_db = trainable && b_node && wants_grad(*b_node);
    if (!need_dinput && !need_dw && !need_db) return;

    if (need_dinput) in_node->ensure_grad();
    if (need_dw) w_node->ensure_grad();
    if (need_db) b_node->ensure_grad();

    const double* dout = self.grad.data();
    const std::size_t wcount = static_cast<std::size_t>(g.out_ch) * g.patch_rows();
    std::vector<double> dw_per_image;
    if (need_dw) dw_per_image.assign(wcount * g.batch, 0.0);

#pragma omp parallel for schedule(static)
    for (int b = 0; b < g.batch; ++b) {
      ConstMap dout_map(dout + b * out_image,
                        static_cast<Eigen::Index>(g.out_spatial()), g.out_ch);
      Eigen::MatrixXd cols;
      if (need_dw) {
        im2col(in_node->data.data() + b * in_image, g, cols);
        MutableMap dw_map(dw_per_image.data() + b * wcount,
                          static_cast<Eigen::Index>(g.patch_rows()), g.out_ch);
        dw_map.noalias() = cols * dout_map;
      }
      if (need_dinput) {
        Eigen::MatrixXd dcols(static_cast<Eigen::Index>(g.patch_rows()),
                              static_cast<Eigen::Index>(g.out_spatial()));
        dcols.noalias() = wmat.transpose() * dout_map.transpose();
        col2im_add(dcols, g, in_node->grad.data() + b * in_image);
      }
    }

    if (need_dw) {
      const std::size_t ksize = static_cast<std::size_t>(g.kh) * g.kw;
      for (int b = 0; b < g.batch; ++b) {
        const double* dwb = dw_per_image.data() + b * wcount;
        for (int oc = 0; oc < g.out_ch; ++oc) {
          for (int c = 0; c < g.in_ch; ++c) {
            double* dst =
                w_node->grad.data() + (static_cast<std::size_t>(oc) * g.in_ch + c) * ksize;
            for (int u = 0; u < g.kh; ++u) {
              for (int v = 0; v < g.kw; ++v) {
                const int su = g.flip ? g.kh - 1 - u : u;
                const int sv = g.flip ? g.kw - 1 - v : v;
                // dw_per_image is laid out like the GEMM weight matrix:
                // column-major (patch_rows x out_ch).
                dst[static_cast<std::size_t>(su) * g.kw + sv] +=
                    dwb[(static_cast<std::size_t>(c) * g.kh + u) * g.kw + v +
                        static_cast<std::size_t>(oc) * g.patch_rows()];
              }
            }
          }
        }
      }
    }
    if (need_db) {
      for (int b = 0; b < g.batch; ++b) {
        const double* slice = dout + b * out_image;
        for (int oc = 0; oc < g.out_ch; ++oc) {
          double acc = 0.0;
          const double* ch = slice + static_cast<std::size_t>(oc) * g.out_spatial();
          for (std::size_t i = 0; i < g.out_spatial(); ++i) acc += ch[i];
          b_node->grad[oc] += acc;
        }
      }
    }
  };
  return out;
}

Tensor leaky_relu(const Tensor& input, double alpha) {
  if (alpha < 0.0 || alpha >= 1.0) {
    throw std::invalid_argument("leaky_relu: alpha must be in [0, 1)");
  }
  Tensor out = make_op_node(input.shape(), {input.node()}, {});
  const auto& x = input.node()->data;
  auto& y = out.node()->data;
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : alpha * x[i];

  auto in_node = input.node();
  out.node()->backward_fn = [in_node, alpha](Node& self) {
    if (!wants_grad(*in_node)) return;
    in_node->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      in_node->grad[i] += self.grad[i] * (in_node->data[i] > 0.0 ? 1.0 : alpha);
    }
  };
  return out;
}

Tensor concat_channels(const std::vector<Tensor>& inputs) {
  if (inputs.empty()) throw std::invalid_argument("concat_channels: no inputs");
  const Shape& first = inputs.front().shape();
  if (first.size() != 4) throw std::invalid_argument("concat_channels: inputs must be 4-d");
  int total_ch = 0;
  for (const Tensor& t : inputs) {
    const Shape& s = t.shape();
    if (s.size() != 4 || s[0] != first[0] || s[2] != first[2] || s[3] != first[3]) {
      throw std::invalid_argument("concat_channels: batch/height/width mismatch");
    }
    total_ch += s[1];
  }

  std::vector<std::shared_ptr<Node>> parents;
  parents.reserve(inputs.size());
  for (const Tensor& t : inputs) parents.push_back(t.node());

  const int batch = first[0];
  const std::size_t plane = static_cast<std::size_t>(first[2]) * first[3];
  Tensor out = make_op_node({batch, total_ch, first[2], first[3]}, std::move(parents), {});

  auto& y = out.node()->data;
  const std::size_t out_image = static_cast<std::size_t>(total_ch) * plane;
  {
    std::size_t ch_offset = 0;
    for (const Tensor& t : inputs) {
      const std::size_t ch = static_cast<std::size_t>(t.dim(1));
      const auto& x = t.node()->data;
      for (int b = 0; b < batch; ++b) {
        std::copy(x.begin() + b * ch * plane, x.begin() + (b + 1) * ch * plane,
                  y.begin() + b * out_image + ch_offset * plane);
      }
      ch_offset += ch;
    }
  }

  out.node()->backward_fn = [batch, plane, out_image](Node& self) {
    std::size_t ch_offset = 0;
    for (auto& parent : self.parents) {
      const std::size_t ch = static_cast<std::size_t>(parent->shape[1]);
      if (wants_grad(*parent)) {
        parent->ensure_grad();
        for (int b = 0; b < batch; ++b) {
          const double* src = self.grad.data() + b * out_image + ch_offset * plane;
          double* dst = parent->grad.data() + b * ch * plane;
          for (std::size_t i = 0; i < ch * plane; ++i) dst[i] += src[i];
        }
      }
      ch_offset += ch;
    }
  };
  return out;
}

Tensor slice_channels(const Tensor& input, int begin, int end) {
  const Shape& s = input.shape();
  if (s.size() != 4) throw std::invalid_argument("slice_channels: input must be 4-d");
  if (begin < 0 || end <= begin || end > s[1]) {
    throw std::invalid_argument("slice_channels: bad channel range");
  }
  const int batch = s[0];
  const int ch = end - begin;
  const std::size_t plane = static_cast<std::size_t>(s[2]) * s[3];
  const std::size_t in_image = static_cast<std::size_t>(s[1]) * plane;
  const std::size_t out_image = static_cast<std::size_t>(ch) * plane;

  Tensor out = make_op_node({batch, ch, s[2], s[3]}, {input.node()}, {});
  auto& y = out.node()->data;
  const auto& x = input.node()->data;
  for (int b = 0; b < batch; ++b) {
    std::copy(x.begin() + b * in_image + begin * plane,
              x.begin() + b * in_image + begin * plane + out_image,
              y.begin() + b * out_image);
  }

  auto in_node = input.node();
  out.node()->backward_fn = [in_node, batch, begin, plane, in_image, out_image](Node& self) {
    if (!wants_grad(*in_node)) return;
    in_node->ensure_grad();
    for (int b = 0; b < batch; ++b) {
      const double* src = self.grad.data() + b * out_image;
      double* dst = in_node->grad.data() + b * in_image + begin * plane;
      for (std::size_t i = 0; i < out_image; ++i) dst[i] += src[i];
    }
  };
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw std::invalid_argument("add: shape mismatch");
  Tensor out = make_op_node(a.shape(), {a.node(), b.node()}, {});
  const auto& xa = a.node()->data;
  const auto& xb = b.node()->data;
  auto& y = out.node()->data;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = xa[i] + xb[i];

  out.node()->backward_fn = [](Node& self) {
    for (auto& parent : self.parents) {
      if (!wants_grad(*parent)) continue;
      parent->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) parent->grad[i] += self.grad[i];
    }
  };
  return out;
}

Tensor scale(const Tensor& input, double factor) {
  Tensor out = make_op_node(input.shape(), {input.node()}, {});
  const auto& x = input.node()->data;
  auto& y = out.node()->data;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = factor * x[i];

  auto in_node = input.node();
  out.node()->backward_fn = [in_node, factor](Node& self) {
    if (!wants_grad(*in_node)) return;
    in_node->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      in_node->grad[i] += factor * self.grad[i];
    }
  };
  return out;
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) throw std::invalid_argument("mse_loss: shape mismatch");
  const double m = static_cast<double>(pred.dim(0));
  Tensor out = make_op_node({1}, {pred.node(), target.node()}, {});
  const auto& p = pred.node()->data;
  const auto& t = target.node()->data;
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - t[i];
    acc += d * d;
  }
  out.node()->data[0] = acc / m;

  auto p_node = pred.node();
  auto t_node = target.node();
  out.node()->backward_fn = [p_node, t_node, m](Node& self) {
    const double g = self.grad[0] * 2.0 / m;
    if (wants_grad(*p_node)) {
      p_node->ensure_grad();
      for (std::size_t i = 0; i < p_node->data.size(); ++i) {
        p_node->grad[i] += g * (p_node->data[i] - t_node->data[i]);
      }
    }
    if (wants_grad(*t_node)) {
      t_node->ensure_grad();
      for (std::size_t i = 0; i < t_node->data.size(); ++i) {
        t_node->grad[i] -= g * (p_node->data[i] - t_node->data[i]);
      }
    }
  };
  return out;
}

Tensor l2_penalty(const std::vector<Tensor>& weights, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("l2_penalty: lambda must be >= 0");
  std::vector<std::shared_ptr<Node>> parents;
  parents.reserve(weights.size());
  double acc = 0.0;
  for (const Tensor& w : weights) {
    parents.push_back(w.node());
    for (double v : w.data()) acc += v * v;
  }
  Tensor out = make_op_node({1}, std::move(parents), {});
  out.node()->data[0] = lambda * acc;

  out.node()->backward_fn = [lambda](Node& self) {
    const double g = self.grad[0] * 2.0 * lambda;
    for (auto& parent : self.parents) {
      if (!wants_grad(*parent)) continue;
      parent->ensure_grad();
      for (std::size_t i = 0; i < parent->data.size(); ++i) {
        parent->grad[i] += g * parent->data[i];
      }
    }
  };
  return out;
}

}  // namespace ttdsr::ad

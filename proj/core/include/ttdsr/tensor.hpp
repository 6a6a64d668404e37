#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace ttdsr::ad {

using Shape = std::vector<int>;

std::size_t numel(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a backward pass needs it
  bool requires_grad = false;

  // Recorded when the node is produced by an op: parents keep the upstream
  // graph alive, backward scatters this node's grad into them.
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};

}  // namespace detail

/// Shared handle to a dense f64 tensor node. The canonical image-batch
/// layout is batch x channels x height x width, row-major.
///
/// Forward ops build a fresh graph every pass; backward() walks it in
/// reverse topological order and accumulates gradients into every node
/// that carries requires_grad (parameters) or feeds one.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value);

  /// Glorot-uniform samples on +-sqrt(6/(fan_in+fan_out)). For 4-d conv
  /// shapes {out, in, kh, kw}: fan_in = in*kh*kw, fan_out = out*kh*kw.
  /// Bit-identical for a given seed on any platform.
  static Tensor glorot_uniform(Shape shape, std::uint64_t seed, bool requires_grad = true);

  bool valid() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
  std::size_t size() const { return node_->data.size(); }

  std::span<double> data() { return node_->data; }
  std::span<const double> data() const { return node_->data; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }

  bool has_grad() const { return node_ && !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->grad; }
  /// Allocates a zeroed gradient when absent.
  void ensure_grad() { node_->ensure_grad(); }
  void zero_grad() {
    if (has_grad()) node_->grad.assign(node_->data.size(), 0.0);
  }
  void drop_grad() { node_->grad.clear(); }

  /// Value of a one-element tensor.
  double value() const {
    if (size() != 1) throw std::logic_error("Tensor::value: tensor is not scalar");
    return node_->data[0];
  }

  /// Reverse-mode sweep from a scalar result. Seeds d(this)/d(this) = 1
  /// and accumulates into .grad of all reachable nodes, except leaves
  /// without requires_grad.
  void backward() const;

  bool all_finite() const;

  /// Identity test: two handles referring to the same node.
  bool same_node(const Tensor& other) const { return node_ == other.node_; }

  // Graph-construction access for op implementations.
  const std::shared_ptr<detail::Node>& node() const { return node_; }
  static Tensor wrap(std::shared_ptr<detail::Node> node) {
    Tensor t;
    t.node_ = std::move(node);
    return t;
  }

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Deterministic uniform double in [0, 1) from a 64-bit generator state.
/// Used by the initializers so results do not depend on the standard
/// library's distribution implementation.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

}  // namespace ttdsr::ad

#include "ttdsr/tensor.hpp"

#include <cmath>
#include <unordered_set>

namespace ttdsr::ad {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 1) throw std::invalid_argument("Tensor shape entries must be positive");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto node = std::make_shared<detail::Node>();
  node->data.assign(numel(shape), 0.0);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return wrap(std::move(node));
}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
  if (data.size() != numel(shape)) {
    throw std::invalid_argument("Tensor::from: data length does not match shape");
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return wrap(std::move(node));
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

Tensor Tensor::glorot_uniform(Shape shape, std::uint64_t seed, bool requires_grad) {
  std::size_t fan_in = 1, fan_out = 1;
  if (shape.size() >= 2) {
    std::size_t receptive = 1;
    for (size_t i = 2; i < shape.size(); ++i) receptive *= static_cast<std::size_t>(shape[i]);
    fan_out = static_cast<std::size_t>(shape[0]) * receptive;
    fan_in = static_cast<std::size_t>(shape[1]) * receptive;
  } else if (shape.size() == 1) {
    fan_in = fan_out = static_cast<std::size_t>(shape[0]);
  }
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));

  Tensor t = zeros(std::move(shape), requires_grad);
  SplitMix64 rng(seed);
  for (double& v : t.data()) {
    v = (2.0 * rng.next_unit() - 1.0) * bound;
  }
  return t;
}

bool Tensor::all_finite() const {
  for (double v : node_->data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::backward() const {
  if (!node_) throw std::logic_error("Tensor::backward on empty tensor");
  if (size() != 1) throw std::logic_error("Tensor::backward requires a scalar result");

  // Iterative post-order DFS: topo holds nodes with all descendants visited.
  std::vector<detail::Node*> topo;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next_child] = stack.back();
    if (next_child < n->parents.size()) {
      detail::Node* p = n->parents[next_child++].get();
      if (visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      topo.push_back(n);
      stack.pop_back();
    }
  }

  node_->ensure_grad();
  node_->grad[0] = 1.0;
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

}  // namespace ttdsr::ad

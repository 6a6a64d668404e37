#pragma once

#include <cstdint>
#include <vector>

#include "ttdsr/tensor.hpp"

namespace ttdsr::ad {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

/// Adam with bias correction; epsilon sits inside the denominator,
/// p -= lr * m_hat / (sqrt(v_hat) + eps).
///
/// Gradients are consumed as-is; the caller zeroes them after the step.
class AdamState {
 public:
  AdamState(const std::vector<Tensor>& params, AdamConfig config = {});

  /// One update over the same parameter list the state was built for.
  /// Throws std::logic_error if any parameter is missing its gradient.
  void step(std::vector<Tensor>& params);

  std::int64_t step_count() const { return step_count_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::int64_t step_count_ = 0;
  std::vector<std::vector<double>> first_moment_;
  std::vector<std::vector<double>> second_moment_;
};

}  // namespace ttdsr::ad

#include "ttdsr/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace ttdsr::ad {

AdamState::AdamState(const std::vector<Tensor>& params, AdamConfig config)
    : config_(config) {
  if (config.beta1 < 0.0 || config.beta1 >= 1.0 || config.beta2 < 0.0 ||
      config.beta2 >= 1.0) {
    throw std::invalid_argument("AdamState: betas must be in [0, 1)");
  }
  if (config.epsilon <= 0.0) {
    throw std::invalid_argument("AdamState: epsilon must be > 0");
  }
  first_moment_.reserve(params.size());
  second_moment_.reserve(params.size());
  for (const Tensor& p : params) {
    first_moment_.emplace_back(p.size(), 0.0);
    second_moment_.emplace_back(p.size(), 0.0);
  }
}

void AdamState::step(std::vector<Tensor>& params) {
  if (params.size() != first_moment_.size()) {
    throw std::logic_error("AdamState: parameter list does not match state");
  }
  for (const Tensor& p : params) {
    if (!p.has_grad()) {
      throw std::logic_error("AdamState: parameter has no gradient");
    }
  }
  ++step_count_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto data = params[i].data();
    auto grad = params[i].grad();
    std::vector<double>& m = first_moment_[i];
    std::vector<double>& v = second_moment_[i];
    for (std::size_t j = 0; j < data.size(); ++j) {
      const double g = grad[j];
      m[j] = b1 * m[j] + (1.0 - b1) * g;
      v[j] = b2 * v[j] + (1.0 - b2) * g * g;
      const double m_hat = m[j] / bias1;
      const double v_hat = v[j] / bias2;
      data[j] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

}  // namespace ttdsr::ad

#include "protgnn/adam.hpp"

#include <cmath>

#include "protgnn/errors.hpp"

namespace protgnn {

Adam::Adam(std::vector<Parameter*> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  if (cfg_.lr <= 0.0) throw ConfigError("adam: lr must be positive");
  slots_.reserve(params_.size());
  for (Parameter* p : params_) {
    slots_.push_back({Tensor::zeros(p->value.shape), Tensor::zeros(p->value.shape)});
  }
}

void Adam::step() {
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    if (!p.trainable) continue;
    if (!p.grad.all_finite())
      throw NumericError("adam: non-finite gradient in parameter '" + p.name + "'");
    Slot& s = slots_[k];
    for (std::size_t i = 0; i < p.value.v.size(); ++i) {
      const double g = p.grad.v[i];
      s.m.v[i] = cfg_.beta1 * s.m.v[i] + (1.0 - cfg_.beta1) * g;
      s.v.v[i] = cfg_.beta2 * s.v.v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = s.m.v[i] / bc1;
      const double vhat = s.v.v[i] / bc2;
      p.value.v[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
    p.zero_grad();
  }
}

}  // namespace protgnn

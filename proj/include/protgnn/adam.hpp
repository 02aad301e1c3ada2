#pragma once

#include <vector>

#include "protgnn/autodiff.hpp"

namespace protgnn {

struct AdamConfig {
  double lr = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard Adam with bias correction. One aggregation point per step:
// gradients must be fully accumulated in Parameter::grad before step(),
// which makes the update invariant to gradient evaluation order.
class Adam {
 public:
  explicit Adam(std::vector<Parameter*> params, AdamConfig cfg = {});

  // Applies one update from the accumulated gradients, then zeroes them.
  // Throws NumericError naming the parameter if a gradient is not finite.
  void step();

  long step_count() const { return step_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  struct Slot {
    Tensor m;
    Tensor v;
  };
  std::vector<Parameter*> params_;
  std::vector<Slot> slots_;
  AdamConfig cfg_;
  long step_ = 0;
};

}  // namespace protgnn

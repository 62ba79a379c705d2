#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "ecgforge/layers.hpp"

namespace ecgforge::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. Moments start at zero; step() consumes the
/// gradients currently stored on the registered parameter tensors.
class Adam {
 public:
  Adam(std::vector<ParamView> params, AdamConfig config = {});

  void step();
  void zero_grad();
  std::int64_t step_count() const { return step_count_; }
  const AdamConfig& config() const { return config_; }

  /// Moment buffers and step counter, for pausing/resuming training.
  void save_state(std::ostream& out) const;
  void load_state(std::istream& in);

 private:
  struct Slot {
    Tensor* param;
    std::vector<double> m, v;
  };
  std::vector<Slot> slots_;
  AdamConfig config_;
  std::int64_t step_count_ = 0;
};

}  // namespace ecgforge::nn

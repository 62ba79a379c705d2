#pragma once

#include <functional>

#include "ecgforge/losses.hpp"
#include "ecgforge/network.hpp"

namespace ecgforge::nn {

/// Loss evaluated on the network output; must also provide the gradient
/// with respect to that output.
using LossFn = std::function<LossValue(const Tensor&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::int64_t checked = 0;
  /// Probes where the two-scale finite differences disagreed: the loss is
  /// not locally smooth inside [p-h, p+h] (a ReLU or max-pool switches
  /// branch there), so the difference quotient is not an estimate of the
  /// derivative at p.
  std::int64_t skipped_unstable = 0;
  /// Probes where both gradients sit below f64 finite-difference
  /// resolution (|L|*eps/h), so no meaningful comparison exists.
  std::int64_t skipped_below_resolution = 0;

  std::int64_t probes() const { return checked + skipped_unstable + skipped_below_resolution; }
  double valid_fraction() const {
    return probes() == 0 ? 0.0 : static_cast<double>(checked) / static_cast<double>(probes());
  }
};

/// Compares analytic parameter gradients against central finite differences
/// (L(p+h) - L(p-h)) / 2h. Relative error is |a-b| / max(|a|, |b|, 1e-8).
///
/// Each probe is evaluated at scales h and h/2; probes whose quotients
/// disagree straddle a non-differentiable point and are excluded (the
/// network is piecewise linear, so central differences across a kink
/// measure a slope average, not the one-sided derivative the backward pass
/// computes). A systematic backward-pass defect shifts every probe of a
/// tensor and cannot hide behind this filter.
///
/// max_per_tensor == 0 checks every parameter scalar; a positive value
/// checks a seeded random subset per parameter tensor, which keeps the
/// check tractable on the full-size network. Running statistics are
/// restored afterwards.
GradCheckResult gradient_check(Network& network, const Tensor& input, const LossFn& loss,
                               double perturbation, Mode mode = Mode::train,
                               std::int64_t max_per_tensor = 0, std::uint64_t seed = 0);

}  // namespace ecgforge::nn

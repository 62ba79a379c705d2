#pragma once

#include <memory>
#include <vector>

#include "ecgforge/layers.hpp"

namespace ecgforge::nn {

/// Ordered stack of layers with cached activations for the backward pass.
/// Optional residual taps pool earlier layers' (flattened) outputs to a
/// fixed width and add them to the head input, which is the output of the
/// layer at head_boundary() - 1.
///
/// A network instance is single-writer: one forward/backward/update cycle
/// at a time.
class Network {
 public:
  Network() = default;
  Network(Network&&) = default;
  Network& operator=(Network&&) = default;

  std::int64_t add(std::unique_ptr<Layer> layer);
  std::int64_t layer_count() const { return static_cast<std::int64_t>(layers_.size()); }
  Layer& layer(std::int64_t i) { return *layers_[static_cast<std::size_t>(i)]; }
  const Layer& layer(std::int64_t i) const { return *layers_[static_cast<std::size_t>(i)]; }

  /// Index of the first head layer. Layers before it form the trunk.
  void set_head_boundary(std::int64_t index) { head_boundary_ = index; }
  std::int64_t head_boundary() const { return head_boundary_; }
  /// Removes the head layers (used when swapping task heads).
  void truncate_to_trunk();

  /// Registers residual taps: each listed trunk layer's output is flattened,
  /// adaptively max-pooled to tap_width and added to the head input.
  void set_residual_taps(std::vector<std::int64_t> layer_indices, std::int64_t tap_width);
  const std::vector<std::int64_t>& residual_taps() const { return tap_indices_; }
  std::int64_t tap_width() const { return tap_width_; }

  const Tensor& forward(const Tensor& input, Mode mode);
  /// Backpropagates from the last forward() call, accumulating parameter
  /// gradients.
  void backward(const Tensor& grad_output);

  std::vector<ParamView> parameters();
  std::vector<ParamView> trunk_parameters();
  std::vector<ParamView> state();
  std::int64_t parameter_count() const;
  void zero_grad();

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
  std::int64_t head_boundary_ = -1;

  std::vector<std::int64_t> tap_indices_;
  std::int64_t tap_width_ = 0;
  std::vector<std::unique_ptr<AdaptiveMaxPool1d>> tap_pools_;
  std::vector<Tensor> tap_flat_, tap_out_;

  Tensor input_;
  std::vector<Tensor> activations_;
  std::vector<Tensor> grad_buffers_;  // two ping-pong buffers
};

}  // namespace ecgforge::nn

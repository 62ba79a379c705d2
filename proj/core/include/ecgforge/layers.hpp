#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ecgforge/rng.hpp"
#include "ecgforge/tensor.hpp"

namespace ecgforge::nn {

enum class Mode { train, eval };

struct ParamView {
  Tensor* tensor;
  std::string name;
};

/// Output length of a valid (no padding) sliding window:
/// floor((length - window) / stride) + 1. Throws GeometryError when the
/// window does not fit.
std::int64_t sliding_out_length(std::int64_t length, std::int64_t window, std::int64_t stride);

/// One stage of a sequential network. forward() writes into a caller-owned
/// output tensor; backward() receives the forward input/output plus the
/// output gradient and writes the input gradient, accumulating parameter
/// gradients in place.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual const char* kind() const = 0;
  virtual void forward(const Tensor& input, Tensor& output, Mode mode) = 0;
  virtual void backward(const Tensor& input, const Tensor& output, const Tensor& grad_out,
                        Tensor& grad_in) = 0;
  virtual std::vector<ParamView> parameters() { return {}; }
  /// Non-trainable persistent state (batchnorm running statistics).
  virtual std::vector<ParamView> state() { return {}; }
};

/// 1-D cross-correlation over [batch, in_channels, length], no padding.
class Conv1d final : public Layer {
 public:
  Conv1d(std::int64_t in_channels, std::int64_t out_channels, std::int64_t kernel_size,
         std::int64_t stride = 1);

  const char* kind() const override { return "conv1d"; }
  void forward(const Tensor& input, Tensor& output, Mode mode) override;
  void backward(const Tensor& input, const Tensor& output, const Tensor& grad_out,
                Tensor& grad_in) override;
  std::vector<ParamView> parameters() override;

  std::int64_t in_channels() const { return in_channels_; }
  std::int64_t out_channels() const { return out_channels_; }
  std::int64_t kernel_size() const { return kernel_size_; }
  std::int64_t stride() const { return stride_; }
  Tensor& weights() { return weights_; }
  const Tensor& weights() const { return weights_; }
  Tensor& bias() { return bias_; }
  const Tensor& bias() const { return bias_; }

 private:
  std::int64_t in_channels_, out_channels_, kernel_size_, stride_;
  Tensor weights_;  // [out_channels, in_channels, kernel_size]
  Tensor bias_;     // [out_channels]
  // per-chunk im2col scratch, reused across calls
  std::vector<std::vector<double>> scratch_;
};

/// Per-channel normalization over the (batch, length) axes of
/// [batch, channels, length]. Train mode uses batch statistics and folds
/// them into the running estimates; eval mode uses the running estimates.
/// Normalization uses the biased variance, the running variance keeps the
/// unbiased one.
class BatchNorm1d final : public Layer {
 public:
  BatchNorm1d(std::int64_t channels, double epsilon = 1e-5, double momentum = 0.1);

  const char* kind() const override { return "batchnorm1d"; }
  void forward(const Tensor& input, Tensor& output, Mode mode) override;
  void backward(const Tensor& input, const Tensor& output, const Tensor& grad_out,
                Tensor& grad_in) override;
  std::vector<ParamView> parameters() override;
  std::vector<ParamView> state() override;

  std::int64_t channels() const { return channels_; }
  double epsilon() const { return epsilon_; }
  double momentum() const { return momentum_; }
  Tensor& gamma() { return gamma_; }
  Tensor& beta() { return beta_; }
  Tensor& running_mean() { return running_mean_; }
  Tensor& running_var() { return running_var_; }

 private:
  std::int64_t channels_;
  double epsilon_, momentum_;
  Tensor gamma_, beta_, running_mean_, running_var_;
  // forward cache for the train-mode backward
  std::vector<double> batch_mean_, batch_invstd_;
  Mode last_mode_ = Mode::train;
};

class ReLU final : public Layer {
 public:
  const char* kind() const override { return "relu"; }
  void forward(const Tensor& input, Tensor& output, Mode mode) override;
  void backward(const Tensor& input, const Tensor& output, const Tensor& grad_out,
                Tensor& grad_in) override;
};

/// Max pooling over the last axis of [batch, channels, length]. The
/// backward pass routes each window's gradient to the first maximal index.
class MaxPool1d final : public Layer {
 public:
  MaxPool1d(std::int64_t pool_size, std::int64_t stride);

  const char* kind() const override { return "maxpool1d"; }
  void forward(const Tensor& input, Tensor& output, Mode mode) override;
  void backward(const Tensor& input, const Tensor& output, const Tensor& grad_out,
                Tensor& grad_in) override;

  std::int64_t pool_size() const { return pool_size_; }
  std::int64_t stride() const { return stride_; }

 private:
  std::int64_t pool_size_, stride_;
  std::vector<std::int32_t> argmax_;
};

/// Max pooling of [batch, features] down to a fixed output width; entry i
/// takes the max over [floor(i*F/out), ceil((i+1)*F/out)). Upsampling is
/// not supported.
class AdaptiveMaxPool1d final : public Layer {
 public:
  explicit AdaptiveMaxPool1d(std::int64_t output_length);

  const char* kind() const override { return "adaptive_maxpool1d"; }
  void forward(const Tensor& input, Tensor& output, Mode mode) override;
  void backward(const Tensor& input, const Tensor& output, const Tensor& grad_out,
                Tensor& grad_in) override;

  std::int64_t output_length() const { return output_length_; }

 private:
  std::int64_t output_length_;
  std::vector<std::int64_t> argmax_;
};

/// [batch, channels, length] -> [batch, channels*length].
class Flatten final : public Layer {
 public:
  const char* kind() const override { return "flatten"; }
  void forward(const Tensor& input, Tensor& output, Mode mode) override;
  void backward(const Tensor& input, const Tensor& output, const Tensor& grad_out,
                Tensor& grad_in) override;
};

/// Affine map of [batch, in_features] to [batch, out_features].
class Linear final : public Layer {
 public:
  Linear(std::int64_t in_features, std::int64_t out_features);

  const char* kind() const override { return "linear"; }
  void forward(const Tensor& input, Tensor& output, Mode mode) override;
  void backward(const Tensor& input, const Tensor& output, const Tensor& grad_out,
                Tensor& grad_in) override;
  std::vector<ParamView> parameters() override;

  std::int64_t in_features() const { return in_features_; }
  std::int64_t out_features() const { return out_features_; }
  Tensor& weights() { return weights_; }
  const Tensor& weights() const { return weights_; }
  Tensor& bias() { return bias_; }
  const Tensor& bias() const { return bias_; }

 private:
  std::int64_t in_features_, out_features_;
  Tensor weights_;  // [out_features, in_features]
  Tensor bias_;     // [out_features]
};

/// Kaiming-normal initialization: weights ~ N(0, 2/fan_in), biases zero.
/// fan_in is in_channels*kernel_size for convolutions and in_features for
/// linear layers.
void kaiming_init(Conv1d& layer, Rng& rng);
void kaiming_init(Linear& layer, Rng& rng);

/// Standalone adaptive max pool of a 1-D sequence (same window rule as the
/// layer).
std::vector<double> adaptive_maxpool1d(std::span<const double> input, std::int64_t output_length);

}  // namespace ecgforge::nn

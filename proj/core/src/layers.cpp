#include "ecgforge/layers.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "ecgforge/parallel.hpp"

namespace ecgforge::nn {

namespace {

using ColMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;
using CMap = Eigen::Map<ColMat>;
using CCMap = Eigen::Map<const ColMat>;

// A row-major [rows, cols] buffer viewed as its transpose in column-major
// order, at zero cost. All GEMMs below are phrased on these views; the
// layout was chosen against measured Eigen throughput at this network's
// shapes.
CMap t_view(double* ptr, std::int64_t rows, std::int64_t cols) {
  return CMap(ptr, cols, rows);
}
CCMap t_view(const double* ptr, std::int64_t rows, std::int64_t cols) {
  return CCMap(ptr, cols, rows);
}

void check_rank3(const Tensor& t, const char* op) {
  if (t.rank() != 3) throw DimensionError(std::string(op) + ": expected [batch, channels, length]");
}

}  // namespace

std::int64_t sliding_out_length(std::int64_t length, std::int64_t window, std::int64_t stride) {
  if (window <= 0 || stride <= 0) throw GeometryError("window and stride must be positive");
  if (length < window) throw GeometryError("window of " + std::to_string(window) +
                                           " does not fit in length " + std::to_string(length));
  return (length - window) / stride + 1;
}

// ---------------------------------------------------------------------------
// Conv1d

Conv1d::Conv1d(std::int64_t in_channels, std::int64_t out_channels, std::int64_t kernel_size,
               std::int64_t stride)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_size_(kernel_size),
      stride_(stride),
      weights_({out_channels, in_channels, kernel_size}, true),
      bias_({out_channels}, true) {
  if (in_channels <= 0 || out_channels <= 0 || kernel_size <= 0 || stride <= 0)
    throw DimensionError("conv1d: non-positive constructor argument");
}

std::vector<ParamView> Conv1d::parameters() {
  return {{&weights_, "weights"}, {&bias_, "bias"}};
}

void Conv1d::forward(const Tensor& input, Tensor& output, Mode) {
  check_rank3(input, "conv1d");
  if (input.dim(1) != in_channels_)
    throw DimensionError("conv1d: input has " + std::to_string(input.dim(1)) +
                         " channels, layer expects " + std::to_string(in_channels_));
  const std::int64_t batch = input.dim(0);
  const std::int64_t len = input.dim(2);
  const std::int64_t out_len = sliding_out_length(len, kernel_size_, stride_);
  const std::int64_t ck = in_channels_ * kernel_size_;
  output.resize({batch, out_channels_, out_len});

  scratch_.resize(static_cast<std::size_t>(parallel_chunks(batch)));
  parallel_for(batch, [&](std::int64_t b0, std::int64_t b1, int chunk) {
    auto& col = scratch_[static_cast<std::size_t>(chunk)];
    col.resize(static_cast<std::size_t>(ck * out_len));
    for (std::int64_t b = b0; b < b1; ++b) {
      const double* x = input.raw() + b * in_channels_ * len;
      // im2col: row (c*K + k) holds x[c, t*stride + k] for t in [0, out_len)
      for (std::int64_t c = 0; c < in_channels_; ++c) {
        for (std::int64_t k = 0; k < kernel_size_; ++k) {
          const double* src = x + c * len + k;
          double* dst = col.data() + (c * kernel_size_ + k) * out_len;
          if (stride_ == 1) {
            std::memcpy(dst, src, static_cast<std::size_t>(out_len) * sizeof(double));
          } else {
            for (std::int64_t t = 0; t < out_len; ++t) dst[t] = src[t * stride_];
          }
        }
      }
      double* y = output.raw() + b * out_channels_ * out_len;
      // Y[o,t] = sum_ck W2[o,ck] col[ck,t], computed as Y^T = col^T W2^T
      t_view(y, out_channels_, out_len).noalias() =
          t_view(col.data(), ck, out_len) * t_view(weights_.raw(), out_channels_, ck);
      for (std::int64_t o = 0; o < out_channels_; ++o) {
        const double bo = bias_[o];
        double* row = y + o * out_len;
        for (std::int64_t t = 0; t < out_len; ++t) row[t] += bo;
      }
    }
  });
}

void Conv1d::backward(const Tensor& input, const Tensor&, const Tensor& grad_out,
                      Tensor& grad_in) {
  const std::int64_t batch = input.dim(0);
  const std::int64_t len = input.dim(2);
  const std::int64_t out_len = grad_out.dim(2);
  const std::int64_t ck = in_channels_ * kernel_size_;
  grad_in.resize(input.shape());
  grad_in.fill(0.0);

  const int chunks = parallel_chunks(batch);
  scratch_.resize(static_cast<std::size_t>(chunks));
  // Per-chunk parameter gradient accumulators, merged in chunk order so the
  // result depends only on the configured thread count.
  std::vector<std::vector<double>> dw(static_cast<std::size_t>(chunks));
  std::vector<std::vector<double>> db(static_cast<std::size_t>(chunks));

  parallel_for(batch, [&](std::int64_t b0, std::int64_t b1, int chunk) {
    auto& col = scratch_[static_cast<std::size_t>(chunk)];
    col.resize(static_cast<std::size_t>(2 * ck * out_len));
    double* xcol = col.data();
    double* dxcol = col.data() + ck * out_len;
    auto& dwc = dw[static_cast<std::size_t>(chunk)];
    auto& dbc = db[static_cast<std::size_t>(chunk)];
    dwc.assign(static_cast<std::size_t>(out_channels_ * ck), 0.0);
    dbc.assign(static_cast<std::size_t>(out_channels_), 0.0);

    for (std::int64_t b = b0; b < b1; ++b) {
      const double* x = input.raw() + b * in_channels_ * len;
      const double* g = grad_out.raw() + b * out_channels_ * out_len;
      double* gx = grad_in.raw() + b * in_channels_ * len;

      for (std::int64_t c = 0; c < in_channels_; ++c) {
        for (std::int64_t k = 0; k < kernel_size_; ++k) {
          const double* src = x + c * len + k;
          double* dst = xcol + (c * kernel_size_ + k) * out_len;
          if (stride_ == 1) {
            std::memcpy(dst, src, static_cast<std::size_t>(out_len) * sizeof(double));
          } else {
            for (std::int64_t t = 0; t < out_len; ++t) dst[t] = src[t * stride_];
          }
        }
      }
      // dW2 += G Xcol^T, via dW2^T = Xcol G^T
      t_view(dwc.data(), out_channels_, ck).noalias() +=
          t_view(xcol, ck, out_len).transpose() * t_view(g, out_channels_, out_len);
      for (std::int64_t o = 0; o < out_channels_; ++o) {
        const double* row = g + o * out_len;
        double s = 0.0;
        for (std::int64_t t = 0; t < out_len; ++t) s += row[t];
        dbc[static_cast<std::size_t>(o)] += s;
      }
      // dXcol = W2^T G, via dXcol^T = G^T W2
      t_view(dxcol, ck, out_len).noalias() =
          t_view(g, out_channels_, out_len) *
          t_view(weights_.raw(), out_channels_, ck).transpose();
      // col2im scatter-add
      for (std::int64_t c = 0; c < in_channels_; ++c) {
        for (std::int64_t k = 0; k < kernel_size_; ++k) {
          const double* src = dxcol + (c * kernel_size_ + k) * out_len;
          double* dst = gx + c * len + k;
          if (stride_ == 1) {
            for (std::int64_t t = 0; t < out_len; ++t) dst[t] += src[t];
          } else {
            for (std::int64_t t = 0; t < out_len; ++t) dst[t * stride_] += src[t];
          }
        }
      }
    }
  });

  auto wg = weights_.grad();
  auto bg = bias_.grad();
  for (int c = 0; c < chunks; ++c) {
    const auto& dwc = dw[static_cast<std::size_t>(c)];
    const auto& dbc = db[static_cast<std::size_t>(c)];
    for (std::size_t i = 0; i < dwc.size(); ++i) wg[i] += dwc[i];
    for (std::size_t i = 0; i < dbc.size(); ++i) bg[i] += dbc[i];
  }
}

// ---------------------------------------------------------------------------
// BatchNorm1d

BatchNorm1d::BatchNorm1d(std::int64_t channels, double epsilon, double momentum)
    : channels_(channels),
      epsilon_(epsilon),
      momentum_(momentum),
      gamma_({channels}, true),
      beta_({channels}, true),
      running_mean_({channels}),
      running_var_({channels}) {
  if (channels <= 0) throw DimensionError("batchnorm1d: channels must be positive");
  if (epsilon <= 0.0) throw NumericError("batchnorm1d: epsilon must be positive");
  gamma_.fill(1.0);
  running_var_.fill(1.0);
  batch_mean_.assign(static_cast<std::size_t>(channels), 0.0);
  batch_invstd_.assign(static_cast<std::size_t>(channels), 0.0);
}

std::vector<ParamView> BatchNorm1d::parameters() {
  return {{&gamma_, "gamma"}, {&beta_, "beta"}};
}

std::vector<ParamView> BatchNorm1d::state() {
  return {{&running_mean_, "running_mean"}, {&running_var_, "running_var"}};
}

void BatchNorm1d::forward(const Tensor& input, Tensor& output, Mode mode) {
  check_rank3(input, "batchnorm1d");
  if (input.dim(1) != channels_) throw DimensionError("batchnorm1d: channel count mismatch");
  const std::int64_t batch = input.dim(0);
  const std::int64_t len = input.dim(2);
  const std::int64_t n = batch * len;
  last_mode_ = mode;
  output.resize(input.shape());

  if (mode == Mode::train && n < 2)
    throw NumericError("batchnorm1d: batch*length must be >= 2 in train mode");

  parallel_for(channels_, [&](std::int64_t c0, std::int64_t c1, int) {
    for (std::int64_t c = c0; c < c1; ++c) {
      double mean, invstd;
      if (mode == Mode::train) {
        double sum = 0.0, sq = 0.0;
        for (std::int64_t b = 0; b < batch; ++b) {
          const double* row = input.raw() + (b * channels_ + c) * len;
          for (std::int64_t t = 0; t < len; ++t) {
            sum += row[t];
            sq += row[t] * row[t];
          }
        }
        mean = sum / static_cast<double>(n);
        double var = sq / static_cast<double>(n) - mean * mean;
        var = std::max(var, 0.0);
        invstd = 1.0 / std::sqrt(var + epsilon_);
        batch_mean_[static_cast<std::size_t>(c)] = mean;
        batch_invstd_[static_cast<std::size_t>(c)] = invstd;
        double unbiased = var * static_cast<double>(n) / static_cast<double>(n - 1);
        running_mean_[c] = (1.0 - momentum_) * running_mean_[c] + momentum_ * mean;
        running_var_[c] = (1.0 - momentum_) * running_var_[c] + momentum_ * unbiased;
      } else {
        mean = running_mean_[c];
        invstd = 1.0 / std::sqrt(running_var_[c] + epsilon_);
      }
      const double a = gamma_[c] * invstd;
      const double shift = beta_[c] - a * mean;
      for (std::int64_t b = 0; b < batch; ++b) {
        const double* row = input.raw() + (b * channels_ + c) * len;
        double* out = output.raw() + (b * channels_ + c) * len;
        for (std::int64_t t = 0; t < len; ++t) out[t] = a * row[t] + shift;
      }
    }
  });
}

void BatchNorm1d::backward(const Tensor& input, const Tensor&, const Tensor& grad_out,
                           Tensor& grad_in) {
  const std::int64_t batch = input.dim(0);
  const std::int64_t len = input.dim(2);
  const std::int64_t n = batch * len;
  grad_in.resize(input.shape());
  auto gg = gamma_.grad();
  auto bg = beta_.grad();
  const bool train = last_mode_ == Mode::train;

  parallel_for(channels_, [&](std::int64_t c0, std::int64_t c1, int) {
    for (std::int64_t c = c0; c < c1; ++c) {
      const double mean = train ? batch_mean_[static_cast<std::size_t>(c)] : running_mean_[c];
      const double invstd = train ? batch_invstd_[static_cast<std::size_t>(c)]
                                  : 1.0 / std::sqrt(running_var_[c] + epsilon_);
      double s1 = 0.0, s2 = 0.0;  // sum g, sum g*xhat
      for (std::int64_t b = 0; b < batch; ++b) {
        const double* x = input.raw() + (b * channels_ + c) * len;
        const double* g = grad_out.raw() + (b * channels_ + c) * len;
        for (std::int64_t t = 0; t < len; ++t) {
          s1 += g[t];
          s2 += g[t] * (x[t] - mean) * invstd;
        }
      }
      gg[static_cast<std::size_t>(c)] += s2;
      bg[static_cast<std::size_t>(c)] += s1;
      const double gcs = gamma_[c] * invstd;
      for (std::int64_t b = 0; b < batch; ++b) {
        const double* x = input.raw() + (b * channels_ + c) * len;
        const double* g = grad_out.raw() + (b * channels_ + c) * len;
        double* gi = grad_in.raw() + (b * channels_ + c) * len;
        if (train) {
          for (std::int64_t t = 0; t < len; ++t) {
            double xhat = (x[t] - mean) * invstd;
            gi[t] = gcs * (g[t] - s1 / static_cast<double>(n) -
                           xhat * s2 / static_cast<double>(n));
          }
        } else {
          for (std::int64_t t = 0; t < len; ++t) gi[t] = gcs * g[t];
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// ReLU

void ReLU::forward(const Tensor& input, Tensor& output, Mode) {
  output.resize(input.shape());
  const double* x = input.raw();
  double* y = output.raw();
  const std::int64_t n = input.size();
  parallel_for(n, [&](std::int64_t i0, std::int64_t i1, int) {
    for (std::int64_t i = i0; i < i1; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  });
}

void ReLU::backward(const Tensor& input, const Tensor&, const Tensor& grad_out,
                    Tensor& grad_in) {
  grad_in.resize(input.shape());
  const double* x = input.raw();
  const double* g = grad_out.raw();
  double* gi = grad_in.raw();
  const std::int64_t n = input.size();
  parallel_for(n, [&](std::int64_t i0, std::int64_t i1, int) {
    for (std::int64_t i = i0; i < i1; ++i) gi[i] = x[i] > 0.0 ? g[i] : 0.0;
  });
}

// ---------------------------------------------------------------------------
// MaxPool1d

MaxPool1d::MaxPool1d(std::int64_t pool_size, std::int64_t stride)
    : pool_size_(pool_size), stride_(stride) {
  if (pool_size <= 0 || stride <= 0) throw GeometryError("maxpool1d: non-positive geometry");
}

void MaxPool1d::forward(const Tensor& input, Tensor& output, Mode) {
  check_rank3(input, "maxpool1d");
  const std::int64_t batch = input.dim(0);
  const std::int64_t ch = input.dim(1);
  const std::int64_t len = input.dim(2);
  const std::int64_t out_len = sliding_out_length(len, pool_size_, stride_);
  output.resize({batch, ch, out_len});
  argmax_.resize(static_cast<std::size_t>(batch * ch * out_len));

  const std::int64_t rows = batch * ch;
  parallel_for(rows, [&](std::int64_t r0, std::int64_t r1, int) {
    for (std::int64_t r = r0; r < r1; ++r) {
      const double* x = input.raw() + r * len;
      double* y = output.raw() + r * out_len;
      std::int32_t* am = argmax_.data() + r * out_len;
      for (std::int64_t t = 0; t < out_len; ++t) {
        std::int64_t start = t * stride_;
        double best = x[start];
        std::int64_t best_i = start;
        for (std::int64_t k = 1; k < pool_size_; ++k) {
          if (x[start + k] > best) {
            best = x[start + k];
            best_i = start + k;
          }
        }
        y[t] = best;
        am[t] = static_cast<std::int32_t>(best_i);
      }
    }
  });
}

void MaxPool1d::backward(const Tensor& input, const Tensor&, const Tensor& grad_out,
                         Tensor& grad_in) {
  const std::int64_t len = input.dim(2);
  const std::int64_t out_len = grad_out.dim(2);
  grad_in.resize(input.shape());
  grad_in.fill(0.0);
  const std::int64_t rows = input.dim(0) * input.dim(1);
  parallel_for(rows, [&](std::int64_t r0, std::int64_t r1, int) {
    for (std::int64_t r = r0; r < r1; ++r) {
      const double* g = grad_out.raw() + r * out_len;
      double* gi = grad_in.raw() + r * len;
      const std::int32_t* am = argmax_.data() + r * out_len;
      for (std::int64_t t = 0; t < out_len; ++t) gi[am[t]] += g[t];
    }
  });
}

// ---------------------------------------------------------------------------
// AdaptiveMaxPool1d

AdaptiveMaxPool1d::AdaptiveMaxPool1d(std::int64_t output_length)
    : output_length_(output_length) {
  if (output_length < 1) throw GeometryError("adaptive_maxpool1d: output_length must be >= 1");
}

void AdaptiveMaxPool1d::forward(const Tensor& input, Tensor& output, Mode) {
  if (input.rank() != 2)
    throw DimensionError("adaptive_maxpool1d: expected [batch, features]");
  const std::int64_t batch = input.dim(0);
  const std::int64_t f = input.dim(1);
  if (output_length_ > f)
    throw GeometryError("adaptive_maxpool1d: upsampling not supported (" +
                        std::to_string(output_length_) + " > " + std::to_string(f) + ")");
  output.resize({batch, output_length_});
  argmax_.resize(static_cast<std::size_t>(batch * output_length_));

  parallel_for(batch, [&](std::int64_t b0, std::int64_t b1, int) {
    for (std::int64_t b = b0; b < b1; ++b) {
      const double* x = input.raw() + b * f;
      double* y = output.raw() + b * output_length_;
      std::int64_t* am = argmax_.data() + b * output_length_;
      for (std::int64_t i = 0; i < output_length_; ++i) {
        std::int64_t lo = i * f / output_length_;
        std::int64_t hi = ((i + 1) * f + output_length_ - 1) / output_length_;
        double best = x[lo];
        std::int64_t best_i = lo;
        for (std::int64_t j = lo + 1; j < hi; ++j) {
          if (x[j] > best) {
            best = x[j];
            best_i = j;
          }
        }
        y[i] = best;
        am[i] = best_i;
      }
    }
  });
}

void AdaptiveMaxPool1d::backward(const Tensor& input, const Tensor&, const Tensor& grad_out,
                                 Tensor& grad_in) {
  const std::int64_t f = input.dim(1);
  grad_in.resize(input.shape());
  grad_in.fill(0.0);
  const std::int64_t batch = input.dim(0);
  parallel_for(batch, [&](std::int64_t b0, std::int64_t b1, int) {
    for (std::int64_t b = b0; b < b1; ++b) {
      const double* g = grad_out.raw() + b * output_length_;
      double* gi = grad_in.raw() + b * f;
      const std::int64_t* am = argmax_.data() + b * output_length_;
      for (std::int64_t i = 0; i < output_length_; ++i) gi[am[i]] += g[i];
    }
  });
}

std::vector<double> adaptive_maxpool1d(std::span<const double> input,
                                       std::int64_t output_length) {
  AdaptiveMaxPool1d pool(output_length);
  Tensor in = Tensor::from({1, static_cast<std::int64_t>(input.size())},
                           std::vector<double>(input.begin(), input.end()));
  Tensor out;
  pool.forward(in, out, Mode::eval);
  return std::vector<double>(out.data().begin(), out.data().end());
}

// ---------------------------------------------------------------------------
// Flatten

void Flatten::forward(const Tensor& input, Tensor& output, Mode) {
  check_rank3(input, "flatten");
  output.resize({input.dim(0), input.dim(1) * input.dim(2)});
  std::memcpy(output.raw(), input.raw(), static_cast<std::size_t>(input.size()) * sizeof(double));
}

void Flatten::backward(const Tensor& input, const Tensor&, const Tensor& grad_out,
                       Tensor& grad_in) {
  grad_in.resize(input.shape());
  std::memcpy(grad_in.raw(), grad_out.raw(),
              static_cast<std::size_t>(input.size()) * sizeof(double));
}

// ---------------------------------------------------------------------------
// Linear

Linear::Linear(std::int64_t in_features, std::int64_t out_features)
    : in_features_(in_features),
      out_features_(out_features),
      weights_({out_features, in_features}, true),
      bias_({out_features}, true) {
  if (in_features <= 0 || out_features <= 0)
    throw DimensionError("linear: non-positive feature count");
}

std::vector<ParamView> Linear::parameters() {
  return {{&weights_, "weights"}, {&bias_, "bias"}};
}

void Linear::forward(const Tensor& input, Tensor& output, Mode) {
  if (input.rank() != 2 || input.dim(1) != in_features_)
    throw DimensionError("linear: expected [batch, " + std::to_string(in_features_) + "]");
  const std::int64_t batch = input.dim(0);
  output.resize({batch, out_features_});
  // Y = X W^T + b, via Y^T = W X^T
  t_view(output.raw(), batch, out_features_).noalias() =
      t_view(weights_.raw(), out_features_, in_features_).transpose() *
      t_view(input.raw(), batch, in_features_);
  for (std::int64_t b = 0; b < batch; ++b) {
    double* row = output.raw() + b * out_features_;
    for (std::int64_t o = 0; o < out_features_; ++o) row[o] += bias_[o];
  }
}

void Linear::backward(const Tensor& input, const Tensor&, const Tensor& grad_out,
                      Tensor& grad_in) {
  const std::int64_t batch = input.dim(0);
  grad_in.resize(input.shape());
  auto wg = weights_.grad();
  auto bg = bias_.grad();
  // dW += G^T X, via dW^T = X^T G
  t_view(wg.data(), out_features_, in_features_).noalias() +=
      t_view(input.raw(), batch, in_features_) *
      t_view(grad_out.raw(), batch, out_features_).transpose();
  for (std::int64_t b = 0; b < batch; ++b) {
    const double* g = grad_out.raw() + b * out_features_;
    for (std::int64_t o = 0; o < out_features_; ++o) bg[static_cast<std::size_t>(o)] += g[o];
  }
  // dX = G W, via dX^T = W^T G^T
  t_view(grad_in.raw(), batch, in_features_).noalias() =
      t_view(weights_.raw(), out_features_, in_features_) *
      t_view(grad_out.raw(), batch, out_features_);
}

// ---------------------------------------------------------------------------
// Initialization

namespace {
void kaiming_fill(Tensor& weights, Tensor& bias, std::int64_t fan_in, Rng& rng) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (double& w : weights.data()) w = rng.normal(0.0, stddev);
  bias.fill(0.0);
}
}  // namespace

void kaiming_init(Conv1d& layer, Rng& rng) {
  kaiming_fill(layer.weights(), layer.bias(), layer.in_channels() * layer.kernel_size(), rng);
}

void kaiming_init(Linear& layer, Rng& rng) {
  kaiming_fill(layer.weights(), layer.bias(), layer.in_features(), rng);
}

}  // namespace ecgforge::nn

#include "ecgforge/network.hpp"

#include <cstring>

namespace ecgforge::nn {

std::int64_t Network::add(std::unique_ptr<Layer> layer) {
  layers_.push_back(std::move(layer));
  return layer_count() - 1;
}

void Network::truncate_to_trunk() {
  if (head_boundary_ < 0 || head_boundary_ > layer_count())
    throw StateError("network: head boundary not set");
  layers_.resize(static_cast<std::size_t>(head_boundary_));
}

void Network::set_residual_taps(std::vector<std::int64_t> layer_indices, std::int64_t tap_width) {
  tap_indices_ = std::move(layer_indices);
  tap_width_ = tap_width;
  tap_pools_.clear();
  for (std::size_t i = 0; i < tap_indices_.size(); ++i)
    tap_pools_.push_back(std::make_unique<AdaptiveMaxPool1d>(tap_width));
  tap_flat_.resize(tap_indices_.size());
  tap_out_.resize(tap_indices_.size());
}

const Tensor& Network::forward(const Tensor& input, Mode mode) {
  if (layers_.empty()) throw StateError("network: no layers");
  input_ = input;
  activations_.resize(layers_.size());
  const Tensor* cur = &input_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->forward(*cur, activations_[i], mode);
    cur = &activations_[i];
    // Head input: add pooled residual contributions from the tapped layers.
    if (!tap_indices_.empty() && head_boundary_ > 0 &&
        static_cast<std::int64_t>(i) == head_boundary_ - 1) {
      Tensor& head_in = activations_[i];
      for (std::size_t t = 0; t < tap_indices_.size(); ++t) {
        const Tensor& tapped = activations_[static_cast<std::size_t>(tap_indices_[t])];
        tap_flat_[t] = tapped.rank() == 3
                           ? tapped.reshaped({tapped.dim(0), tapped.dim(1) * tapped.dim(2)})
                           : tapped;
        tap_pools_[t]->forward(tap_flat_[t], tap_out_[t], mode);
        if (tap_out_[t].shape() != head_in.shape())
          throw DimensionError("network: residual tap width mismatch");
        for (std::int64_t j = 0; j < head_in.size(); ++j) head_in[j] += tap_out_[t][j];
      }
    }
  }
  return activations_.back();
}

void Network::backward(const Tensor& grad_output) {
  if (activations_.size() != layers_.size())
    throw StateError("network: backward without forward");
  grad_buffers_.resize(2);
  std::vector<Tensor> tap_grads(tap_indices_.size());

  Tensor* gout = &grad_buffers_[0];
  Tensor* gin = &grad_buffers_[1];
  *gout = grad_output;

  for (std::int64_t i = layer_count() - 1; i >= 0; --i) {
    // The head input gradient also flows through each residual tap pool.
    if (!tap_indices_.empty() && i == head_boundary_ - 1) {
      for (std::size_t t = 0; t < tap_indices_.size(); ++t) {
        Tensor flat_grad;
        tap_pools_[t]->backward(tap_flat_[t], tap_out_[t], *gout, flat_grad);
        const Tensor& tapped = activations_[static_cast<std::size_t>(tap_indices_[t])];
        flat_grad.reshape_inplace(tapped.shape());
        tap_grads[t] = std::move(flat_grad);
      }
    }
    const Tensor& in = i == 0 ? input_ : activations_[static_cast<std::size_t>(i - 1)];
    layers_[static_cast<std::size_t>(i)]->backward(in, activations_[static_cast<std::size_t>(i)],
                                                   *gout, *gin);
    // Inject tap gradients when the walk reaches the tapped layer.
    for (std::size_t t = 0; t < tap_indices_.size(); ++t) {
      if (tap_indices_[t] == i - 1 && tap_grads[t].size() > 0) {
        for (std::int64_t j = 0; j < gin->size(); ++j) (*gin)[j] += tap_grads[t][j];
      }
    }
    std::swap(gout, gin);
  }
}

std::vector<ParamView> Network::parameters() {
  std::vector<ParamView> out;
  for (auto& l : layers_)
    for (auto& p : l->parameters()) out.push_back(p);
  return out;
}

std::vector<ParamView> Network::trunk_parameters() {
  std::vector<ParamView> out;
  const std::int64_t boundary = head_boundary_ < 0 ? layer_count() : head_boundary_;
  for (std::int64_t i = 0; i < boundary; ++i)
    for (auto& p : layers_[static_cast<std::size_t>(i)]->parameters()) out.push_back(p);
  return out;
}

std::vector<ParamView> Network::state() {
  std::vector<ParamView> out;
  for (auto& l : layers_)
    for (auto& p : l->state()) out.push_back(p);
  return out;
}

std::int64_t Network::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& l : layers_)
    for (const auto& p : const_cast<Layer&>(*l).parameters()) n += p.tensor->size();
  return n;
}

void Network::zero_grad() {
  for (auto& l : layers_)
    for (auto& p : l->parameters()) p.tensor->zero_grad();
}

}  // namespace ecgforge::nn

#include "ecgforge/model.hpp"

#include <string>

namespace ecgforge::model {

std::int64_t head_output_dim(Task task) {
  return task == Task::regression ? kRegressionOutput : kClassificationOutput;
}

std::vector<std::int64_t> EcgNetConfig::kernel_ladder() const {
  std::vector<std::int64_t> out;
  std::int64_t k = first_kernel;
  for (int i = 0; i < n_conv_layers; ++i) {
    out.push_back(k);
    if (k / 2 >= min_kernel) k /= 2;
  }
  return out;
}

std::vector<std::int64_t> EcgNetConfig::channel_ladder() const {
  std::vector<std::int64_t> out;
  std::int64_t c = first_channels;
  for (int i = 0; i < n_conv_layers; ++i) {
    out.push_back(c);
    if (c * 2 <= max_channels) c *= 2;
  }
  return out;
}

std::vector<StageShape> shape_chain(const EcgNetConfig& config, std::int64_t input_length) {
  const auto kernels = config.kernel_ladder();
  std::vector<StageShape> chain;
  std::int64_t len = input_length;
  for (int i = 0; i < config.n_conv_layers; ++i) {
    StageShape s{};
    try {
      s.post_conv = nn::sliding_out_length(len, kernels[static_cast<std::size_t>(i)], 1);
      s.post_pool = nn::sliding_out_length(s.post_conv, config.pool_size, config.pool_stride);
    } catch (const GeometryError& e) {
      throw GeometryError("shape chain fails at block " + std::to_string(i + 1) + ": " +
                          e.what());
    }
    chain.push_back(s);
    len = s.post_pool;
  }
  return chain;
}

std::int64_t flatten_width(const EcgNetConfig& config, std::int64_t input_length) {
  const auto chain = shape_chain(config, input_length);
  const auto channels = config.channel_ladder();
  return channels.back() * chain.back().post_pool;
}

namespace {

void add_head(nn::Network& net, const EcgNetConfig& config, Task task, Rng& rng) {
  const std::int64_t width = config.adaptive_output_length;
  const std::int64_t out = head_output_dim(task);
  std::vector<std::unique_ptr<nn::Linear>> linears;
  if (config.n_head_layers == 1) {
    linears.push_back(std::make_unique<nn::Linear>(width, out));
  } else if (config.n_head_layers == 3) {
    linears.push_back(std::make_unique<nn::Linear>(width, width));
    linears.push_back(std::make_unique<nn::Linear>(width, width));
    linears.push_back(std::make_unique<nn::Linear>(width, out));
  } else {
    throw ConstructionError("head must have 1 or 3 linear layers");
  }
  for (std::size_t i = 0; i < linears.size(); ++i) {
    nn::kaiming_init(*linears[i], rng);
    net.add(std::move(linears[i]));
    if (i + 1 < linears.size()) net.add(std::make_unique<nn::ReLU>());
  }
}

}  // namespace

nn::Network build_network(const EcgNetConfig& config, Rng& rng, std::int64_t input_length) {
  const auto chain = shape_chain(config, input_length);  // validates geometry
  const auto kernels = config.kernel_ladder();
  const auto channels = config.channel_ladder();
  const std::int64_t flat = channels.back() * chain.back().post_pool;
  if (config.adaptive_output_length > flat)
    throw ConstructionError("adaptive pool width " +
                            std::to_string(config.adaptive_output_length) +
                            " exceeds flattened width " + std::to_string(flat));

  nn::Network net;
  std::vector<std::int64_t> block_ends;  // index of each block's final layer
  std::int64_t in_ch = 1;
  for (int i = 0; i < config.n_conv_layers; ++i) {
    auto conv = std::make_unique<nn::Conv1d>(in_ch, channels[static_cast<std::size_t>(i)],
                                             kernels[static_cast<std::size_t>(i)], 1);
    nn::kaiming_init(*conv, rng);
    net.add(std::move(conv));
    net.add(std::make_unique<nn::ReLU>());
    if (config.batchnorm)
      net.add(std::make_unique<nn::BatchNorm1d>(channels[static_cast<std::size_t>(i)],
                                                config.bn_epsilon, config.bn_momentum));
    block_ends.push_back(
        net.add(std::make_unique<nn::MaxPool1d>(config.pool_size, config.pool_stride)));
    in_ch = channels[static_cast<std::size_t>(i)];
  }
  net.add(std::make_unique<nn::Flatten>());
  net.add(std::make_unique<nn::AdaptiveMaxPool1d>(config.adaptive_output_length));
  net.set_head_boundary(net.layer_count());
  if (config.residual_to_head)
    net.set_residual_taps(std::move(block_ends), config.adaptive_output_length);
  add_head(net, config, config.task, rng);
  return net;
}

void swap_head(nn::Network& network, const EcgNetConfig& config, Task new_task, Rng& rng) {
  network.truncate_to_trunk();
  add_head(network, config, new_task, rng);
}

}  // namespace ecgforge::model

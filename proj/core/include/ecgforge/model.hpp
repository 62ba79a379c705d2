#pragma once

#include <cstdint>
#include <vector>

#include "ecgforge/network.hpp"
#include "ecgforge/rng.hpp"

namespace ecgforge::model {

enum class Task { regression, classification };

constexpr std::int64_t kRegressionOutput = 100;
constexpr std::int64_t kClassificationOutput = 17;
constexpr std::int64_t kInputLength = 3600;

std::int64_t head_output_dim(Task task);

/// The searched architecture family. Defaults are the selected
/// configuration: 7 conv blocks, first kernel 128 halving to 2, first
/// channel count 16 doubling up to 128, pool 4/2, a single linear head,
/// and no residual connections into the head.
struct EcgNetConfig {
  int n_conv_layers = 7;
  std::int64_t first_kernel = 128;
  std::int64_t min_kernel = 2;
  std::int64_t first_channels = 16;
  std::int64_t max_channels = 128;
  std::int64_t pool_size = 4;
  std::int64_t pool_stride = 2;
  bool batchnorm = true;
  double bn_epsilon = 1e-5;
  double bn_momentum = 0.1;
  std::int64_t adaptive_output_length = 1000;
  int n_head_layers = 1;  // 1 or 3
  Task task = Task::classification;
  bool residual_to_head = false;

  std::vector<std::int64_t> kernel_ladder() const;
  std::vector<std::int64_t> channel_ladder() const;
};

struct StageShape {
  std::int64_t post_conv;
  std::int64_t post_pool;
  bool operator==(const StageShape&) const = default;
};

/// Per-block (post-conv, post-pool) lengths for the given input, failing
/// with GeometryError (naming the stage) on a non-positive length.
std::vector<StageShape> shape_chain(const EcgNetConfig& config, std::int64_t input_length);

/// Width of the flattened features entering the adaptive pool.
std::int64_t flatten_width(const EcgNetConfig& config, std::int64_t input_length);

/// Assembles and Kaiming-initializes the network for [batch, 1, 3600]
/// inputs: n blocks of conv-relu-batchnorm-maxpool, flatten, adaptive max
/// pool, then the task head.
nn::Network build_network(const EcgNetConfig& config, Rng& rng,
                          std::int64_t input_length = kInputLength);

/// Replaces the head layers with a freshly initialized head for the new
/// task; every trunk parameter and running statistic is preserved
/// bit-exactly.
void swap_head(nn::Network& network, const EcgNetConfig& config, Task new_task, Rng& rng);

}  // namespace ecgforge::model

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "ecgforge/checkpoint.hpp"
#include "ecgforge/gradcheck.hpp"
#include "ecgforge/losses.hpp"
#include "ecgforge/model.hpp"

using namespace ecgforge;
using namespace ecgforge::nn;
using namespace ecgforge::model;

namespace {

Tensor random_input(std::int64_t batch, std::int64_t length, Rng& rng) {
  Tensor t({batch, 1, length});
  for (auto& v : t.data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

// Counting oracle: parameters per layer from first principles.
std::int64_t oracle_param_count(const EcgNetConfig& cfg) {
  auto kernels = cfg.kernel_ladder();
  auto channels = cfg.channel_ladder();
  std::int64_t total = 0, in_ch = 1;
  for (int i = 0; i < cfg.n_conv_layers; ++i) {
    total += channels[i] * in_ch * kernels[i] + channels[i];  // conv w + b
    if (cfg.batchnorm) total += 2 * channels[i];              // gamma + beta
    in_ch = channels[i];
  }
  std::int64_t w = cfg.adaptive_output_length;
  std::int64_t out = cfg.task == Task::regression ? 100 : 17;
  if (cfg.n_head_layers == 1) {
    total += w * out + out;
  } else {
    total += 2 * (w * w + w) + w * out + out;
  }
  return total;
}

}  // namespace

TEST_CASE("kernel and channel ladders") {
  EcgNetConfig cfg;
  CHECK(cfg.kernel_ladder() == std::vector<std::int64_t>{128, 64, 32, 16, 8, 4, 2});
  CHECK(cfg.channel_ladder() == std::vector<std::int64_t>{16, 32, 64, 128, 128, 128, 128});

  EcgNetConfig small;
  small.n_conv_layers = 3;
  small.first_channels = 8;
  small.first_kernel = 64;
  CHECK(small.kernel_ladder() == std::vector<std::int64_t>{64, 32, 16});
  CHECK(small.channel_ladder() == std::vector<std::int64_t>{8, 16, 32});
}

TEST_CASE("shape chain pins the published stage lengths") {
  EcgNetConfig cfg;
  auto chain = shape_chain(cfg, 3600);
  const std::vector<StageShape> expect = {{3473, 1735}, {1672, 835}, {804, 401}, {386, 192},
                                          {185, 91},    {88, 43},    {42, 20}};
  REQUIRE(chain.size() == expect.size());
  for (std::size_t i = 0; i < chain.size(); ++i) {
    CHECK(chain[i].post_conv == expect[i].post_conv);
    CHECK(chain[i].post_pool == expect[i].post_pool);
  }
  CHECK(flatten_width(cfg, 3600) == 128 * 20);
  CHECK(flatten_width(cfg, 3600) == 2560);
}

TEST_CASE("shape chain fails fast on impossible geometry") {
  EcgNetConfig cfg;
  // conv with kernel 128 on 128 samples leaves length 1; pool of 4 cannot fit
  CHECK_THROWS_AS(shape_chain(cfg, 128), GeometryError);
  CHECK_THROWS_AS(shape_chain(cfg, 100), GeometryError);
}

TEST_CASE("network forward shapes per task") {
  Rng rng(100);
  EcgNetConfig reg;
  reg.task = Task::regression;
  Network net = build_network(reg, rng);
  Tensor in = random_input(1, 3600, rng);
  const Tensor& out = net.forward(in, Mode::eval);
  CHECK(out.shape() == std::vector<std::int64_t>{1, 100});

  EcgNetConfig cls;
  cls.task = Task::classification;
  Network cnet = build_network(cls, rng);
  const Tensor& cout = cnet.forward(in, Mode::eval);
  CHECK(cout.shape() == std::vector<std::int64_t>{1, 17});
}

TEST_CASE("forward pass is finite at initialization") {
  Rng rng(101);
  EcgNetConfig cfg;
  cfg.task = Task::regression;
  Network net = build_network(cfg, rng);
  Tensor in = random_input(2, 3600, rng);
  const Tensor& out = net.forward(in, Mode::train);
  CHECK(out.all_finite());
}

TEST_CASE("parameter count matches the counting oracle") {
  Rng rng(102);
  EcgNetConfig reg;
  reg.task = Task::regression;
  Network net = build_network(reg, rng);
  CHECK(net.parameter_count() == oracle_param_count(reg));
  CHECK(net.parameter_count() == 562772);

  EcgNetConfig cls;
  cls.task = Task::classification;
  Network cnet = build_network(cls, rng);
  CHECK(cnet.parameter_count() == oracle_param_count(cls));
  CHECK(cnet.parameter_count() == 479689);
}

TEST_CASE("swap_head preserves the trunk bit-exactly") {
  Rng rng(103);
  EcgNetConfig cfg;
  cfg.task = Task::regression;
  Network net = build_network(cfg, rng);
  auto before = trunk_bytes(net);

  swap_head(net, cfg, Task::classification, rng);
  CHECK(trunk_bytes(net) == before);
  Tensor in = random_input(1, 3600, rng);
  CHECK(net.forward(in, Mode::eval).dim(1) == 17);

  swap_head(net, cfg, Task::regression, rng);
  CHECK(trunk_bytes(net) == before);
  CHECK(net.forward(in, Mode::eval).dim(1) == 100);
}

TEST_CASE("checkpoint round-trip reproduces outputs and bytes") {
  Rng rng(104);
  EcgNetConfig cfg;
  cfg.task = Task::classification;
  Network net = build_network(cfg, rng);
  // make running statistics non-trivial
  Tensor in = random_input(2, 3600, rng);
  net.forward(in, Mode::train);

  auto bytes = checkpoint_bytes(net);
  std::string blob(bytes.begin(), bytes.end());
  std::istringstream is(blob, std::ios::binary);
  Network copy = load_checkpoint(is);
  CHECK(checkpoint_bytes(copy) == bytes);

  const Tensor& a = net.forward(in, Mode::eval);
  const Tensor& b = copy.forward(in, Mode::eval);
  for (std::int64_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("load_checkpoint_into validates the manifest") {
  Rng rng(105);
  EcgNetConfig cfg;
  Network net = build_network(cfg, rng);
  auto bytes = checkpoint_bytes(net);

  EcgNetConfig other;
  other.adaptive_output_length = 500;
  Network wrong = build_network(other, rng);
  std::string blob(bytes.begin(), bytes.end());
  std::istringstream is(blob, std::ios::binary);
  CHECK_THROWS_AS(load_checkpoint_into(wrong, is), ParseError);

  Network right = build_network(cfg, rng);
  std::istringstream is2(blob, std::ios::binary);
  CHECK_NOTHROW(load_checkpoint_into(right, is2));
  CHECK(checkpoint_bytes(right) == bytes);
}

TEST_CASE("same seed builds bit-identical networks") {
  EcgNetConfig cfg;
  Rng a(4242), b(4242);
  Network na = build_network(cfg, a);
  Network nb = build_network(cfg, b);
  CHECK(checkpoint_bytes(na) == checkpoint_bytes(nb));
}

TEST_CASE("small variant network with residual taps backpropagates correctly") {
  EcgNetConfig cfg;
  cfg.n_conv_layers = 3;
  cfg.first_channels = 8;
  cfg.first_kernel = 64;
  cfg.pool_size = 3;
  cfg.adaptive_output_length = 40;
  cfg.n_head_layers = 3;
  cfg.residual_to_head = true;
  cfg.task = Task::classification;
  Rng rng(106);
  Network net = build_network(cfg, rng, 600);

  Tensor in({2, 1, 600});
  for (auto& v : in.data()) v = rng.uniform(-1.0, 1.0);
  std::vector<int> labels{3, 11};
  LossFn loss = [&](const Tensor& out) { return cross_entropy_loss_with_grad(out, labels); };
  auto res = gradient_check(net, in, loss, 1e-5, Mode::train, 8, 2024);
  CHECK(res.max_rel_error < 1e-4);
  CHECK(res.checked > 0);
}

TEST_CASE("no-batchnorm variant builds and runs") {
  EcgNetConfig cfg;
  cfg.n_conv_layers = 5;
  cfg.batchnorm = false;
  cfg.adaptive_output_length = 100;
  Rng rng(107);
  Network net = build_network(cfg, rng, 2000);
  Tensor in({1, 1, 2000});
  for (auto& v : in.data()) v = rng.uniform(-1.0, 1.0);
  CHECK(net.forward(in, Mode::train).dim(1) == 17);
}

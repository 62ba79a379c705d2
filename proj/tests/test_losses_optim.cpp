#include <cmath>
#include <sstream>

#include "doctest.h"
#include "ecgforge/losses.hpp"
#include "ecgforge/optim.hpp"
#include "ecgforge/rng.hpp"

using namespace ecgforge;
using namespace ecgforge::nn;

TEST_CASE("smooth l1 hand-evaluated cases") {
  Tensor p = Tensor::from({3}, {1.0, -2.0, 0.5});
  CHECK(smooth_l1_loss(p, p) == 0.0);

  Tensor a = Tensor::from({1}, {0.5});
  Tensor z = Tensor::from({1}, {0.0});
  CHECK(smooth_l1_loss(a, z) == doctest::Approx(0.125).epsilon(1e-12));

  Tensor b = Tensor::from({1}, {2.0});
  CHECK(smooth_l1_loss(b, z) == doctest::Approx(1.5).epsilon(1e-12));

  CHECK_THROWS_AS(smooth_l1_loss(a, p), DimensionError);
}

TEST_CASE("smooth l1 is C1 at |d| = 1") {
  Tensor z = Tensor::from({1}, {0.0});
  auto at = [&](double d) {
    Tensor p = Tensor::from({1}, {d});
    return smooth_l1_loss_with_grad(p, z);
  };
  auto below = at(1.0 - 1e-6);
  auto above = at(1.0 + 1e-6);
  CHECK(std::fabs(above.value - below.value) < 1e-5);
  CHECK(std::fabs(above.grad[0] - below.grad[0]) < 1e-5);
  auto nbelow = at(-1.0 + 1e-6);
  auto nabove = at(-1.0 - 1e-6);
  CHECK(std::fabs(nabove.value - nbelow.value) < 1e-5);
  CHECK(std::fabs(nabove.grad[0] - nbelow.grad[0]) < 1e-5);
}

TEST_CASE("smooth l1 gradient in both regions") {
  Tensor z = Tensor::from({2}, {0.0, 0.0});
  Tensor p = Tensor::from({2}, {0.5, -3.0});
  auto lv = smooth_l1_loss_with_grad(p, z);
  CHECK(lv.grad[0] == doctest::Approx(0.5 / 2.0));
  CHECK(lv.grad[1] == doctest::Approx(-1.0 / 2.0));
}

TEST_CASE("cross entropy hand-evaluated cases") {
  SUBCASE("uniform logits over 17 classes") {
    Tensor logits = Tensor::zeros({1, 17});
    int label = 4;
    CHECK(cross_entropy_loss(logits, std::span<const int>(&label, 1)) ==
          doctest::Approx(std::log(17.0)).epsilon(1e-12));
  }
  SUBCASE("logits [2,0], label 0") {
    Tensor logits = Tensor::from({1, 2}, {2.0, 0.0});
    int label = 0;
    const double expect = -std::log(std::exp(2.0) / (std::exp(2.0) + 1.0));
    CHECK(cross_entropy_loss(logits, std::span<const int>(&label, 1)) ==
          doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("large margin drives loss to zero") {
    Tensor logits = Tensor::from({1, 3}, {60.0, 0.0, 0.0});
    int label = 0;
    CHECK(cross_entropy_loss(logits, std::span<const int>(&label, 1)) < 1e-12);
  }
  SUBCASE("error paths") {
    Tensor logits = Tensor::zeros({1, 3});
    int bad = 3;
    CHECK_THROWS_AS(cross_entropy_loss(logits, std::span<const int>(&bad, 1)), IndexError);
    int neg = -1;
    CHECK_THROWS_AS(cross_entropy_loss(logits, std::span<const int>(&neg, 1)), IndexError);
    Tensor inf = Tensor::from({1, 2}, {std::numeric_limits<double>::infinity(), 0.0});
    int ok = 0;
    CHECK_THROWS_AS(cross_entropy_loss(inf, std::span<const int>(&ok, 1)), NumericError);
  }
}

TEST_CASE("softmax rows sum to one within 1e-12") {
  Rng rng(21);
  Tensor logits({40, 17});
  for (auto& v : logits.data()) v = rng.uniform(-30.0, 30.0);
  Tensor p = softmax_rows(logits);
  for (std::int64_t b = 0; b < 40; ++b) {
    double s = 0.0;
    for (std::int64_t c = 0; c < 17; ++c) s += p.at({b, c});
    CHECK(std::fabs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("cross entropy gradient is softmax minus one-hot over batch") {
  Tensor logits = Tensor::from({2, 3}, {1.0, 0.0, -1.0, 0.5, 0.5, 0.5});
  std::vector<int> labels{0, 2};
  auto lv = cross_entropy_loss_with_grad(logits, labels);
  Tensor p = softmax_rows(logits);
  for (std::int64_t b = 0; b < 2; ++b)
    for (std::int64_t c = 0; c < 3; ++c) {
      double expect = (p.at({b, c}) - (labels[static_cast<std::size_t>(b)] == c ? 1.0 : 0.0)) / 2.0;
      CHECK(lv.grad.at({b, c}) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("adam zero gradient is a no-op on parameters") {
  Tensor p = Tensor::from({3}, {1.0, -2.0, 0.5});
  p.set_requires_grad(true);
  Adam adam({{&p, "p"}});
  for (int i = 0; i < 5; ++i) {
    p.zero_grad();
    adam.step();
  }
  CHECK(adam.step_count() == 5);
  CHECK(p[0] == 1.0);
  CHECK(p[1] == -2.0);
  CHECK(p[2] == 0.5);
}

TEST_CASE("adam first step moves by about the learning rate") {
  SUBCASE("positive gradient") {
    Tensor p = Tensor::from({1}, {0.3});
    p.set_requires_grad(true);
    Adam adam({{&p, "p"}});
    p.grad()[0] = 1.0;
    adam.step();
    CHECK(p[0] == doctest::Approx(0.3 - 0.001).epsilon(1e-6));
  }
  SUBCASE("negative gradient flips the sign") {
    Tensor p = Tensor::from({1}, {0.3});
    p.set_requires_grad(true);
    Adam adam({{&p, "p"}});
    p.grad()[0] = -4.0;
    adam.step();
    CHECK(p[0] == doctest::Approx(0.3 + 0.001).epsilon(1e-6));
  }
}

TEST_CASE("adam matches a scalar reference over several steps") {
  // independent scalar recurrence
  double m = 0, v = 0, ref = 0.7;
  const double lr = 0.001, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  Tensor p = Tensor::from({1}, {0.7});
  p.set_requires_grad(true);
  Adam adam({{&p, "p"}});
  Rng rng(31);
  for (int t = 1; t <= 50; ++t) {
    double g = rng.uniform(-2.0, 2.0);
    p.zero_grad();
    p.grad()[0] = g;
    adam.step();
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    double mhat = m / (1 - std::pow(b1, t));
    double vhat = v / (1 - std::pow(b2, t));
    ref -= lr * mhat / (std::sqrt(vhat) + eps);
    CHECK(p[0] == doctest::Approx(ref).epsilon(1e-14));
  }
}

TEST_CASE("adam state round-trips through save/load") {
  Tensor p = Tensor::from({2}, {1.0, 2.0});
  p.set_requires_grad(true);
  Adam a({{&p, "p"}});
  p.grad()[0] = 0.5;
  p.grad()[1] = -0.25;
  a.step();
  std::stringstream buf;
  a.save_state(buf);

  Tensor q = Tensor::from({2}, {1.0, 2.0});
  q.set_requires_grad(true);
  Adam b({{&q, "q"}});
  b.load_state(buf);
  CHECK(b.step_count() == 1);
  // after loading, identical gradients must produce identical updates
  p.zero_grad();
  q.zero_grad();
  p.grad()[1] = 1.0;
  q.grad()[1] = 1.0;
  // align parameter values first
  q[0] = p[0];
  q[1] = p[1];
  a.step();
  b.step();
  CHECK(p[0] == q[0]);
  CHECK(p[1] == q[1]);
}

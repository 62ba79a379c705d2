#include "ecgforge/optim.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "ecgforge/errors.hpp"

namespace ecgforge::nn {

Adam::Adam(std::vector<ParamView> params, AdamConfig config) : config_(config) {
  if (config.beta1 <= 0.0 || config.beta1 >= 1.0 || config.beta2 <= 0.0 || config.beta2 >= 1.0)
    throw NumericError("adam: betas must lie in (0, 1)");
  if (config.epsilon <= 0.0) throw NumericError("adam: epsilon must be positive");
  slots_.reserve(params.size());
  for (const auto& p : params) {
    Slot s;
    s.param = p.tensor;
    s.m.assign(static_cast<std::size_t>(p.tensor->size()), 0.0);
    s.v.assign(static_cast<std::size_t>(p.tensor->size()), 0.0);
    slots_.push_back(std::move(s));
  }
}

void Adam::step() {
  ++step_count_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));
  for (Slot& s : slots_) {
    auto g = s.param->grad();
    auto p = s.param->data();
    if (g.size() != s.m.size()) throw DimensionError("adam: parameter shape changed");
    for (std::size_t i = 0; i < g.size(); ++i) {
      s.m[i] = b1 * s.m[i] + (1.0 - b1) * g[i];
      s.v[i] = b2 * s.v[i] + (1.0 - b2) * g[i] * g[i];
      double mhat = s.m[i] / c1;
      double vhat = s.v[i] / c2;
      p[i] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
    }
  }
}

void Adam::zero_grad() {
  for (Slot& s : slots_) s.param->zero_grad();
}

void Adam::save_state(std::ostream& out) const {
  std::int64_t n = static_cast<std::int64_t>(slots_.size());
  out.write(reinterpret_cast<const char*>(&step_count_), sizeof(step_count_));
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  for (const Slot& s : slots_) {
    std::int64_t len = static_cast<std::int64_t>(s.m.size());
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(reinterpret_cast<const char*>(s.m.data()), len * static_cast<std::int64_t>(sizeof(double)));
    out.write(reinterpret_cast<const char*>(s.v.data()), len * static_cast<std::int64_t>(sizeof(double)));
  }
}

void Adam::load_state(std::istream& in) {
  std::int64_t n = 0;
  in.read(reinterpret_cast<char*>(&step_count_), sizeof(step_count_));
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!in || n != static_cast<std::int64_t>(slots_.size()))
    throw ParseError("adam state: slot count mismatch");
  for (Slot& s : slots_) {
    std::int64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    if (!in || len != static_cast<std::int64_t>(s.m.size()))
      throw ParseError("adam state: moment length mismatch");
    in.read(reinterpret_cast<char*>(s.m.data()), len * static_cast<std::int64_t>(sizeof(double)));
    in.read(reinterpret_cast<char*>(s.v.data()), len * static_cast<std::int64_t>(sizeof(double)));
    if (!in) throw ParseError("adam state: truncated stream");
  }
}

}  // namespace ecgforge::nn

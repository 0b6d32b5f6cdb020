// Copyright (c) 2026 vcdistill authors
// SPDX-License-Identifier: Apache-2.0

#include "vcd/diffusion.hpp"

#include <cmath>
#include <stdexcept>

#include "vcd/ops.hpp"

namespace vcd {

NoiseSchedule make_schedule(int T, double beta_start, double beta_end, ScheduleKind kind) {
  if (T < 1) throw std::invalid_argument("make_schedule: T must be >= 1");
  if (!(beta_start > 0.0) || !(beta_end < 1.0) || beta_start > beta_end)
    throw std::invalid_argument("make_schedule: require 0 < beta_start <= beta_end < 1");
  if (kind != ScheduleKind::kLinear)
    throw std::invalid_argument("make_schedule: unsupported schedule kind");

  NoiseSchedule s;
  s.beta_.resize(static_cast<std::size_t>(T));
  s.alpha_.resize(static_cast<std::size_t>(T));
  s.alpha_bar_.resize(static_cast<std::size_t>(T));
  s.beta_start_ = beta_start;
  s.beta_end_ = beta_end;
  s.kind_ = kind;

  double prod = 1.0;
  for (int i = 0; i < T; ++i) {
    const double frac = T == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(T - 1);
    const double b = beta_start + (beta_end - beta_start) * frac;
    s.beta_[static_cast<std::size_t>(i)] = b;
    const double a = 1.0 - b;
    s.alpha_[static_cast<std::size_t>(i)] = a;
    prod *= a;
    s.alpha_bar_[static_cast<std::size_t>(i)] = prod;
  }
  return s;
}

namespace {
void check_step(int t, const NoiseSchedule& sched) {
  if (t < 1 || t > sched.steps())
    throw std::out_of_range("diffusion: step index out of range");
}
}  // namespace

Tensor forward_diffuse(const Tensor& x0, int t, const Tensor& epsilon,
                       const NoiseSchedule& sched) {
  check_step(t, sched);
  check_same_shape(x0, epsilon, "forward_diffuse");
  const double ab = sched.alpha_bar(t);
  const double cs = std::sqrt(ab), cn = std::sqrt(1.0 - ab);
  Tensor out(x0.shape());
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = cs * x0[i] + cn * epsilon[i];
  return out;
}

DiffusedSample forward_diffuse_sample(const Tensor& x0, int t, const Tensor& epsilon,
                                      const NoiseSchedule& sched) {
  return DiffusedSample{forward_diffuse(x0, t, epsilon, sched), t, epsilon};
}

Tensor reverse_step(const Tensor& x_t, int t, const Tensor& eps_pred,
                    const NoiseSchedule& sched) {
  check_step(t, sched);
  check_same_shape(x_t, eps_pred, "reverse_step");
  const double a = sched.alpha(t), ab = sched.alpha_bar(t);
  const double inv_sqrt_a = 1.0 / std::sqrt(a);
  const double eps_coef = (1.0 - a) / std::sqrt(1.0 - ab);
  Tensor out(x_t.shape());
  for (std::int64_t i = 0; i < out.size(); ++i)
    out[i] = inv_sqrt_a * (x_t[i] - eps_coef * eps_pred[i]);
  return out;
}

Var forward_diffuse(const Var& x0, int t, const Tensor& epsilon, const NoiseSchedule& sched) {
  check_step(t, sched);
  check_same_shape(x0.value(), epsilon, "forward_diffuse");
  const double ab = sched.alpha_bar(t);
  Tensor noise = epsilon;
  for (std::int64_t i = 0; i < noise.size(); ++i) noise[i] *= std::sqrt(1.0 - ab);
  return add(mul_scalar(x0, std::sqrt(ab)), Var::constant(std::move(noise)));
}

Var reverse_step(const Var& x_t, int t, const Var& eps_pred, const NoiseSchedule& sched) {
  check_step(t, sched);
  check_same_shape(x_t.value(), eps_pred.value(), "reverse_step");
  const double a = sched.alpha(t), ab = sched.alpha_bar(t);
  const double inv_sqrt_a = 1.0 / std::sqrt(a);
  const double eps_coef = (1.0 - a) / std::sqrt(1.0 - ab);
  return mul_scalar(sub(x_t, mul_scalar(eps_pred, eps_coef)), inv_sqrt_a);
}

}  // namespace vcd

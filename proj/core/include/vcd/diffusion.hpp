// Copyright (c) 2026 vcdistill authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "vcd/autodiff.hpp"
#include "vcd/tensor.hpp"

namespace vcd {

enum class ScheduleKind { kLinear };

/// Per-step noise schedule. Step indices are 1-based at the API boundary
/// (t in {1..T}); storage is zero-based. Immutable after construction.
class NoiseSchedule {
 public:
  NoiseSchedule() = default;

  int steps() const { return static_cast<int>(beta_.size()); }
  double beta(int t) const { return beta_.at(index(t)); }
  double alpha(int t) const { return alpha_.at(index(t)); }
  double alpha_bar(int t) const { return alpha_bar_.at(index(t)); }

  double beta_start() const { return beta_start_; }
  double beta_end() const { return beta_end_; }
  ScheduleKind kind() const { return kind_; }

  friend NoiseSchedule make_schedule(int T, double beta_start, double beta_end,
                                     ScheduleKind kind);

 private:
  std::size_t index(int t) const {
    if (t < 1 || t > steps()) throw std::out_of_range("NoiseSchedule: step index out of range");
    return static_cast<std::size_t>(t - 1);
  }

  std::vector<double> beta_, alpha_, alpha_bar_;
  double beta_start_ = 0.0, beta_end_ = 0.0;
  ScheduleKind kind_ = ScheduleKind::kLinear;
};

/// Builds a schedule with beta interpolated linearly over steps. All products
/// are accumulated in 64-bit.
NoiseSchedule make_schedule(int T, double beta_start, double beta_end,
                            ScheduleKind kind = ScheduleKind::kLinear);

struct DiffusedSample {
  Tensor x_t;
  int t = 0;
  Tensor epsilon;  // retained for oracle tests
};

/// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps, elementwise.
Tensor forward_diffuse(const Tensor& x0, int t, const Tensor& epsilon,
                       const NoiseSchedule& sched);
DiffusedSample forward_diffuse_sample(const Tensor& x0, int t, const Tensor& epsilon,
                                      const NoiseSchedule& sched);

/// Reverse mean: (1/sqrt(a_t)) (x_t - ((1-a_t)/sqrt(1-abar_t)) eps_pred).
Tensor reverse_step(const Tensor& x_t, int t, const Tensor& eps_pred,
                    const NoiseSchedule& sched);

// Differentiable variants used inside training graphs.
Var forward_diffuse(const Var& x0, int t, const Tensor& epsilon, const NoiseSchedule& sched);
Var reverse_step(const Var& x_t, int t, const Var& eps_pred, const NoiseSchedule& sched);

}  // namespace vcd

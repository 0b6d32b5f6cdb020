// Copyright (c) 2026 vcdistill authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "vcd/autodiff.hpp"

namespace vcd::testing {

/// Central finite-difference check of a scalar-valued graph builder against
/// the analytic gradients on the given leaf parameters. Returns the maximum
/// relative error over all checked elements.
inline double gradcheck_max_rel_error(const std::function<Var()>& build,
                                      std::vector<Var> params, double h = 1e-5) {
  for (auto& p : params) p.zero_grad();
  Var loss = build();
  backward(loss);

  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (auto& p : params)
    analytic.push_back(p.has_grad() ? p.grad_view() : Tensor(p.value().shape()));

  double max_rel = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& x = params[pi].value_mut();
    for (std::int64_t i = 0; i < x.size(); ++i) {
      const double orig = x[i];
      x[i] = orig + h;
      const double lp = build().value()[0];
      x[i] = orig - h;
      const double lm = build().value()[0];
      x[i] = orig;
      const double numeric = (lp - lm) / (2.0 * h);
      const double ana = analytic[pi][i];
      const double denom = std::max({std::abs(numeric), std::abs(ana), 1e-6});
      max_rel = std::max(max_rel, std::abs(numeric - ana) / denom);
    }
  }
  return max_rel;
}

}  // namespace vcd::testing

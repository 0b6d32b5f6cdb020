// Copyright (c) 2026 vcdistill authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vcd/autodiff.hpp"
#include "vcd/ops.hpp"
#include "vcd/rng.hpp"

namespace vcd {

/// Ordered name -> parameter registry. Insertion order is the serialization
/// order, so checkpoints are deterministic.
class ParamMap {
 public:
  void add(const std::string& name, const Var& p);
  Var find(const std::string& name) const;  // throws if missing
  bool contains(const std::string& name) const;
  const std::vector<std::pair<std::string, Var>>& items() const { return items_; }
  std::size_t count() const { return items_.size(); }
  std::int64_t total_size() const;
  void zero_grads();
  double grad_norm(const std::string& name) const;

 private:
  std::vector<std::pair<std::string, Var>> items_;
};

/// Copies values from src into dst by name; shapes must match exactly.
void copy_params(const ParamMap& src, ParamMap& dst);

/// Weight-normalized 1-D convolution. Padding is reflect "same": the output
/// has ceil(T/stride) frames for any input length.
class WNConv1d {
 public:
  WNConv1d() = default;
  WNConv1d(int in_ch, int out_ch, int kernel, int stride, Rng& rng);

  Var forward(const Var& x) const;
  void collect(const std::string& prefix, ParamMap& pm) const;

  int in_channels() const { return in_ch_; }
  int out_channels() const { return out_ch_; }
  int kernel() const { return kernel_; }
  std::int64_t param_count() const;

 private:
  int in_ch_ = 0, out_ch_ = 0, kernel_ = 0, stride_ = 1;
  Var v_, g_, b_;
};

class Linear {
 public:
  Linear() = default;
  Linear(int in_dim, int out_dim, Rng& rng, double init_scale = 1.0);

  Var forward(const Var& x) const;  // x: [in_dim]
  void collect(const std::string& prefix, ParamMap& pm) const;
  std::int64_t param_count() const;

 private:
  Var w_, b_;
};

/// Sinusoidal embedding of an integer step index, dimension d (even).
Tensor sinusoidal_embedding(int t, int d);

}  // namespace vcd

// Copyright (c) 2026 vcdistill authors
// SPDX-License-Identifier: Apache-2.0

#include "vcd/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace vcd {

void ParamMap::add(const std::string& name, const Var& p) {
  if (contains(name)) throw std::invalid_argument("ParamMap::add: duplicate name " + name);
  items_.emplace_back(name, p);
}

Var ParamMap::find(const std::string& name) const {
  for (const auto& [n, p] : items_)
    if (n == name) return p;
  throw std::out_of_range("ParamMap::find: no parameter named " + name);
}

bool ParamMap::contains(const std::string& name) const {
  for (const auto& [n, p] : items_)
    if (n == name) return true;
  return false;
}

std::int64_t ParamMap::total_size() const {
  std::int64_t s = 0;
  for (const auto& [n, p] : items_) s += p.value().size();
  return s;
}

void ParamMap::zero_grads() {
  for (auto& [n, p] : items_) {
    Var v = p;
    v.zero_grad();
  }
}

double ParamMap::grad_norm(const std::string& name) const {
  Var p = find(name);
  if (!p.has_grad()) return 0.0;
  double s = 0.0;
  const Tensor& g = p.grad_view();
  for (std::int64_t i = 0; i < g.size(); ++i) s += g[i] * g[i];
  return std::sqrt(s);
}

void copy_params(const ParamMap& src, ParamMap& dst) {
  if (src.count() != dst.count())
    throw std::invalid_argument("copy_params: parameter count mismatch");
  for (const auto& [name, p] : src.items()) {
    Var d = dst.find(name);
    if (!d.value().same_shape(p.value()))
      throw std::invalid_argument("copy_params: shape mismatch for " + name);
    d.value_mut() = p.value();
  }
}

WNConv1d::WNConv1d(int in_ch, int out_ch, int kernel, int stride, Rng& rng)
    : in_ch_(in_ch), out_ch_(out_ch), kernel_(kernel), stride_(stride) {
  if (in_ch < 1 || out_ch < 1 || kernel < 1 || stride < 1)
    throw std::invalid_argument("WNConv1d: bad geometry");
  const double std = 1.0 / std::sqrt(static_cast<double>(in_ch * kernel));
  Tensor v = rng.normal_tensor({out_ch, in_ch, kernel}, std);
  // g initialized to the row norms so the effective weight equals v at init.
  Tensor g({out_ch});
  const std::int64_t m = static_cast<std::int64_t>(in_ch) * kernel;
  for (std::int64_t o = 0; o < out_ch; ++o) {
    double s = 0.0;
    for (std::int64_t j = 0; j < m; ++j) s += v[o * m + j] * v[o * m + j];
    g[o] = std::sqrt(s) + 1e-12;
  }
  v_ = Var::parameter(std::move(v));
  g_ = Var::parameter(std::move(g));
  b_ = Var::parameter(Tensor({out_ch}));
}

Var WNConv1d::forward(const Var& x) const {
  const std::int64_t t = x.value().cols();
  const std::int64_t to = (t + stride_ - 1) / stride_;  // ceil(T/stride)
  const std::int64_t needed = (to - 1) * stride_ + kernel_;
  const std::int64_t pad_total = needed - t;
  const std::int64_t pad_left = pad_total / 2;
  const std::int64_t pad_right = pad_total - pad_left;
  Var w = weight_norm(v_, g_);
  Var padded = (pad_total > 0) ? reflect_pad_time(x, pad_left, pad_right) : x;
  return conv1d_valid(padded, w, b_, stride_);
}

void WNConv1d::collect(const std::string& prefix, ParamMap& pm) const {
  pm.add(prefix + ".v", v_);
  pm.add(prefix + ".g", g_);
  pm.add(prefix + ".b", b_);
}

std::int64_t WNConv1d::param_count() const {
  return v_.value().size() + g_.value().size() + b_.value().size();
}

Linear::Linear(int in_dim, int out_dim, Rng& rng, double init_scale) {
  if (in_dim < 1 || out_dim < 1) throw std::invalid_argument("Linear: bad geometry");
  const double std = init_scale / std::sqrt(static_cast<double>(in_dim));
  w_ = Var::parameter(rng.normal_tensor({out_dim, in_dim}, std));
  b_ = Var::parameter(Tensor({out_dim}));
}

Var Linear::forward(const Var& x) const { return add(matvec(w_, x), b_); }

void Linear::collect(const std::string& prefix, ParamMap& pm) const {
  pm.add(prefix + ".w", w_);
  pm.add(prefix + ".b", b_);
}

std::int64_t Linear::param_count() const { return w_.value().size() + b_.value().size(); }

Tensor sinusoidal_embedding(int t, int d) {
  if (d < 2 || d % 2 != 0) throw std::invalid_argument("sinusoidal_embedding: d must be even");
  Tensor e({d});
  const int half = d / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) /
                                 static_cast<double>(half > 1 ? half - 1 : 1));
    e[i] = std::sin(static_cast<double>(t) * freq);
    e[half + i] = std::cos(static_cast<double>(t) * freq);
  }
  return e;
}

}  // namespace vcd

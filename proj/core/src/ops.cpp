// Copyright (c) 2026 vcdistill authors
// SPDX-License-Identifier: Apache-2.0

#include "vcd/ops.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace vcd {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using MapConstMat = Eigen::Map<const RowMat>;

void axpy(Tensor& dst, const Tensor& src, double scale = 1.0) {
  for (std::int64_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
}

/// Mirror index into [0, n-1] without repeating the edge sample; degenerates
/// to clamping when n == 1.
std::int64_t mirror_index(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  const std::int64_t period = 2 * (n - 1);
  std::int64_t m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - m;
}

Var unary_ew(const Var& a, Tensor value, std::function<double(double, double)> dfn) {
  // dfn(input, output) -> local derivative
  auto an = a.node();
  Tensor in = a.value();
  Tensor out_copy = value;
  return Var::make(std::move(value), {a},
                   [an, in = std::move(in), out_copy = std::move(out_copy),
                    dfn = std::move(dfn)](Node& n) {
                     if (!an->requires_grad) return;
                     Tensor& ga = an->ensure_grad();
                     for (std::int64_t i = 0; i < ga.size(); ++i)
                       ga[i] += n.grad[i] * dfn(in[i], out_copy[i]);
                   });
}

}  // namespace

Var add(const Var& a, const Var& b) {
  check_same_shape(a.value(), b.value(), "add");
  Tensor v = a.value();
  axpy(v, b.value());
  auto an = a.node(), bn = b.node();
  return Var::make(std::move(v), {a, b}, [an, bn](Node& n) {
    if (an->requires_grad) axpy(an->ensure_grad(), n.grad);
    if (bn->requires_grad) axpy(bn->ensure_grad(), n.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a.value(), b.value(), "sub");
  Tensor v = a.value();
  axpy(v, b.value(), -1.0);
  auto an = a.node(), bn = b.node();
  return Var::make(std::move(v), {a, b}, [an, bn](Node& n) {
    if (an->requires_grad) axpy(an->ensure_grad(), n.grad);
    if (bn->requires_grad) axpy(bn->ensure_grad(), n.grad, -1.0);
  });
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a.value(), b.value(), "mul");
  Tensor v = a.value();
  for (std::int64_t i = 0; i < v.size(); ++i) v[i] *= b.value()[i];
  auto an = a.node(), bn = b.node();
  Tensor av = a.value(), bv = b.value();
  return Var::make(std::move(v), {a, b},
                   [an, bn, av = std::move(av), bv = std::move(bv)](Node& n) {
                     if (an->requires_grad) {
                       Tensor& ga = an->ensure_grad();
                       for (std::int64_t i = 0; i < ga.size(); ++i) ga[i] += n.grad[i] * bv[i];
                     }
                     if (bn->requires_grad) {
                       Tensor& gb = bn->ensure_grad();
                       for (std::int64_t i = 0; i < gb.size(); ++i) gb[i] += n.grad[i] * av[i];
                     }
                   });
}

Var add_scalar(const Var& a, double c) {
  Tensor v = a.value();
  for (std::int64_t i = 0; i < v.size(); ++i) v[i] += c;
  auto an = a.node();
  return Var::make(std::move(v), {a}, [an](Node& n) {
    if (an->requires_grad) axpy(an->ensure_grad(), n.grad);
  });
}

Var mul_scalar(const Var& a, double c) {
  Tensor v = a.value();
  for (std::int64_t i = 0; i < v.size(); ++i) v[i] *= c;
  auto an = a.node();
  return Var::make(std::move(v), {a}, [an, c](Node& n) {
    if (an->requires_grad) axpy(an->ensure_grad(), n.grad, c);
  });
}

Var neg(const Var& a) { return mul_scalar(a, -1.0); }

Var abs_op(const Var& a) {
  Tensor v = a.value();
  for (std::int64_t i = 0; i < v.size(); ++i) v[i] = std::abs(v[i]);
  return unary_ew(a, std::move(v), [](double x, double) {
    return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
  });
}

Var square(const Var& a) {
  Tensor v = a.value();
  for (std::int64_t i = 0; i < v.size(); ++i) v[i] *= v[i];
  return unary_ew(a, std::move(v), [](double x, double) { return 2.0 * x; });
}

Var sigmoid(const Var& a) {
  Tensor v = a.value();
  for (std::int64_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (1.0 + std::exp(-v[i]));
  return unary_ew(a, std::move(v), [](double, double y) { return y * (1.0 - y); });
}

Var tanh_op(const Var& a) {
  Tensor v = a.value();
  for (std::int64_t i = 0; i < v.size(); ++i) v[i] = std::tanh(v[i]);
  return unary_ew(a, std::move(v), [](double, double y) { return 1.0 - y * y; });
}

Var leaky_relu(const Var& a, double slope) {
  Tensor v = a.value();
  for (std::int64_t i = 0; i < v.size(); ++i)
    if (v[i] < 0.0) v[i] *= slope;
  return unary_ew(a, std::move(v),
                  [slope](double x, double) { return x >= 0.0 ? 1.0 : slope; });
}

Var mean_all(const Var& a) {
  const std::int64_t n = a.value().size();
  if (n == 0) throw std::invalid_argument("mean_all: empty input");
  double s = 0.0;
  for (std::int64_t i = 0; i < n; ++i) s += a.value()[i];
  auto an = a.node();
  return Var::make(Tensor::scalar(s / static_cast<double>(n)), {a}, [an, n](Node& nd) {
    if (!an->requires_grad) return;
    axpy(an->ensure_grad(), Tensor::full(an->value.shape(), nd.grad[0] / static_cast<double>(n)));
  });
}

Var l1_mean(const Var& a, const Var& b) { return mean_all(abs_op(sub(a, b))); }

double scalar_value(const Var& a) {
  if (a.value().size() != 1) throw std::invalid_argument("scalar_value: not a scalar");
  return a.value()[0];
}

Var glu(const Var& x) {
  const Tensor& xv = x.value();
  if (xv.ndim() != 2 || xv.rows() % 2 != 0)
    throw std::invalid_argument("glu: expects [2C x T]");
  const std::int64_t c = xv.rows() / 2, t = xv.cols();
  Tensor v({c, t});
  Tensor gate({c, t});
  for (std::int64_t i = 0; i < c; ++i)
    for (std::int64_t j = 0; j < t; ++j) {
      const double g = 1.0 / (1.0 + std::exp(-xv.at2(c + i, j)));
      gate.at2(i, j) = g;
      v.at2(i, j) = xv.at2(i, j) * g;
    }
  auto xn = x.node();
  Tensor av({c, t});
  for (std::int64_t i = 0; i < c; ++i)
    for (std::int64_t j = 0; j < t; ++j) av.at2(i, j) = xv.at2(i, j);
  return Var::make(std::move(v), {x},
                   [xn, c, t, gate = std::move(gate), av = std::move(av)](Node& n) {
                     if (!xn->requires_grad) return;
                     Tensor& gx = xn->ensure_grad();
                     for (std::int64_t i = 0; i < c; ++i)
                       for (std::int64_t j = 0; j < t; ++j) {
                         const double up = n.grad.at2(i, j);
                         const double g = gate.at2(i, j);
                         gx.at2(i, j) += up * g;
                         gx.at2(c + i, j) += up * av.at2(i, j) * g * (1.0 - g);
                       }
                   });
}

Var concat_rows(const Var& a, const Var& b) {
  const Tensor &av = a.value(), &bv = b.value();
  if (av.ndim() != 2 || bv.ndim() != 2 || av.cols() != bv.cols())
    throw std::invalid_argument("concat_rows: frame counts differ");
  const std::int64_t ra = av.rows(), rb = bv.rows(), t = av.cols();
  Tensor v({ra + rb, t});
  for (std::int64_t i = 0; i < ra; ++i)
    for (std::int64_t j = 0; j < t; ++j) v.at2(i, j) = av.at2(i, j);
  for (std::int64_t i = 0; i < rb; ++i)
    for (std::int64_t j = 0; j < t; ++j) v.at2(ra + i, j) = bv.at2(i, j);
  auto an = a.node(), bn = b.node();
  return Var::make(std::move(v), {a, b}, [an, bn, ra, rb, t](Node& n) {
    if (an->requires_grad) {
      Tensor& ga = an->ensure_grad();
      for (std::int64_t i = 0; i < ra; ++i)
        for (std::int64_t j = 0; j < t; ++j) ga.at2(i, j) += n.grad.at2(i, j);
    }
    if (bn->requires_grad) {
      Tensor& gb = bn->ensure_grad();
      for (std::int64_t i = 0; i < rb; ++i)
        for (std::int64_t j = 0; j < t; ++j) gb.at2(i, j) += n.grad.at2(ra + i, j);
    }
  });
}

Var slice_time(const Var& x, std::int64_t t0, std::int64_t len) {
  const Tensor& xv = x.value();
  if (xv.ndim() != 2 || t0 < 0 || len <= 0 || t0 + len > xv.cols())
    throw std::invalid_argument("slice_time: range out of bounds");
  const std::int64_t c = xv.rows();
  Tensor v({c, len});
  for (std::int64_t i = 0; i < c; ++i)
    for (std::int64_t j = 0; j < len; ++j) v.at2(i, j) = xv.at2(i, t0 + j);
  auto xn = x.node();
  return Var::make(std::move(v), {x}, [xn, c, t0, len](Node& n) {
    if (!xn->requires_grad) return;
    Tensor& gx = xn->ensure_grad();
    for (std::int64_t i = 0; i < c; ++i)
      for (std::int64_t j = 0; j < len; ++j) gx.at2(i, t0 + j) += n.grad.at2(i, j);
  });
}

Var reflect_pad_time(const Var& x, std::int64_t left, std::int64_t right) {
  const Tensor& xv = x.value();
  if (xv.ndim() != 2 || left < 0 || right < 0)
    throw std::invalid_argument("reflect_pad_time: bad arguments");
  const std::int64_t c = xv.rows(), t = xv.cols();
  const std::int64_t to = t + left + right;
  Tensor v({c, to});
  for (std::int64_t j = 0; j < to; ++j) {
    const std::int64_t src = mirror_index(j - left, t);
    for (std::int64_t i = 0; i < c; ++i) v.at2(i, j) = xv.at2(i, src);
  }
  auto xn = x.node();
  return Var::make(std::move(v), {x}, [xn, c, t, to, left](Node& n) {
    if (!xn->requires_grad) return;
    Tensor& gx = xn->ensure_grad();
    for (std::int64_t j = 0; j < to; ++j) {
      const std::int64_t src = mirror_index(j - left, t);
      for (std::int64_t i = 0; i < c; ++i) gx.at2(i, src) += n.grad.at2(i, j);
    }
  });
}

Var upsample_nearest(const Var& x, std::int64_t factor) {
  const Tensor& xv = x.value();
  if (xv.ndim() != 2 || factor < 1) throw std::invalid_argument("upsample_nearest: bad factor");
  const std::int64_t c = xv.rows(), t = xv.cols(), to = t * factor;
  Tensor v({c, to});
  for (std::int64_t i = 0; i < c; ++i)
    for (std::int64_t j = 0; j < to; ++j) v.at2(i, j) = xv.at2(i, j / factor);
  auto xn = x.node();
  return Var::make(std::move(v), {x}, [xn, c, to, factor](Node& n) {
    if (!xn->requires_grad) return;
    Tensor& gx = xn->ensure_grad();
    for (std::int64_t i = 0; i < c; ++i)
      for (std::int64_t j = 0; j < to; ++j) gx.at2(i, j / factor) += n.grad.at2(i, j);
  });
}

Var avg_pool_time(const Var& x, std::int64_t factor) {
  const Tensor& xv = x.value();
  if (xv.ndim() != 2 || factor < 1) throw std::invalid_argument("avg_pool_time: bad factor");
  const std::int64_t c = xv.rows(), t = xv.cols(), to = t / factor;
  if (to == 0) throw std::invalid_argument("avg_pool_time: input shorter than factor");
  Tensor v({c, to});
  for (std::int64_t i = 0; i < c; ++i)
    for (std::int64_t j = 0; j < to; ++j) {
      double s = 0.0;
      for (std::int64_t k = 0; k < factor; ++k) s += xv.at2(i, j * factor + k);
      v.at2(i, j) = s / static_cast<double>(factor);
    }
  auto xn = x.node();
  return Var::make(std::move(v), {x}, [xn, c, to, factor](Node& n) {
    if (!xn->requires_grad) return;
    Tensor& gx = xn->ensure_grad();
    const double inv = 1.0 / static_cast<double>(factor);
    for (std::int64_t i = 0; i < c; ++i)
      for (std::int64_t j = 0; j < to; ++j)
        for (std::int64_t k = 0; k < factor; ++k)
          gx.at2(i, j * factor + k) += n.grad.at2(i, j) * inv;
  });
}

Var subsample_time(const Var& x, std::int64_t period, std::int64_t phase) {
  const Tensor& xv = x.value();
  if (xv.ndim() != 2 || period < 1 || phase < 0 || phase >= xv.cols())
    throw std::invalid_argument("subsample_time: bad arguments");
  const std::int64_t c = xv.rows(), t = xv.cols();
  const std::int64_t to = (t - phase - 1) / period + 1;
  Tensor v({c, to});
  for (std::int64_t i = 0; i < c; ++i)
    for (std::int64_t j = 0; j < to; ++j) v.at2(i, j) = xv.at2(i, phase + j * period);
  auto xn = x.node();
  return Var::make(std::move(v), {x}, [xn, c, to, period, phase](Node& n) {
    if (!xn->requires_grad) return;
    Tensor& gx = xn->ensure_grad();
    for (std::int64_t i = 0; i < c; ++i)
      for (std::int64_t j = 0; j < to; ++j)
        gx.at2(i, phase + j * period) += n.grad.at2(i, j);
  });
}

Var instance_norm(const Var& x, double eps) {
  const Tensor& xv = x.value();
  if (xv.ndim() != 2) throw std::invalid_argument("instance_norm: expects 2-D");
  const std::int64_t c = xv.rows(), t = xv.cols();
  Tensor v({c, t});
  Tensor inv_std({c});
  Tensor yc({c, t});
  for (std::int64_t i = 0; i < c; ++i) {
    double mu = 0.0;
    for (std::int64_t j = 0; j < t; ++j) mu += xv.at2(i, j);
    mu /= static_cast<double>(t);
    double var = 0.0;
    for (std::int64_t j = 0; j < t; ++j) {
      const double d = xv.at2(i, j) - mu;
      var += d * d;
    }
    var /= static_cast<double>(t);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[i] = is;
    for (std::int64_t j = 0; j < t; ++j) {
      const double y = (xv.at2(i, j) - mu) * is;
      v.at2(i, j) = y;
      yc.at2(i, j) = y;
    }
  }
  auto xn = x.node();
  return Var::make(std::move(v), {x},
                   [xn, c, t, inv_std = std::move(inv_std), yc = std::move(yc)](Node& n) {
                     if (!xn->requires_grad) return;
                     Tensor& gx = xn->ensure_grad();
                     for (std::int64_t i = 0; i < c; ++i) {
                       double gmean = 0.0, gymean = 0.0;
                       for (std::int64_t j = 0; j < t; ++j) {
                         gmean += n.grad.at2(i, j);
                         gymean += n.grad.at2(i, j) * yc.at2(i, j);
                       }
                       gmean /= static_cast<double>(t);
                       gymean /= static_cast<double>(t);
                       for (std::int64_t j = 0; j < t; ++j)
                         gx.at2(i, j) += inv_std[i] * (n.grad.at2(i, j) - gmean -
                                                       yc.at2(i, j) * gymean);
                     }
                   });
}

Var global_stat_norm(const Var& x, double eps) {
  const Tensor& xv = x.value();
  const std::int64_t n_el = xv.size();
  if (n_el == 0) throw std::invalid_argument("global_stat_norm: empty input");
  double mu = 0.0;
  for (std::int64_t i = 0; i < n_el; ++i) mu += xv[i];
  mu /= static_cast<double>(n_el);
  double var = 0.0;
  for (std::int64_t i = 0; i < n_el; ++i) {
    const double d = xv[i] - mu;
    var += d * d;
  }
  var /= static_cast<double>(n_el);
  const double is = 1.0 / std::sqrt(var + eps);
  Tensor v(xv.shape());
  Tensor yc(xv.shape());
  for (std::int64_t i = 0; i < n_el; ++i) {
    const double y = (xv[i] - mu) * is;
    v[i] = y;
    yc[i] = y;
  }
  auto xn = x.node();
  return Var::make(std::move(v), {x}, [xn, n_el, is, yc = std::move(yc)](Node& n) {
    if (!xn->requires_grad) return;
    Tensor& gx = xn->ensure_grad();
    double gmean = 0.0, gymean = 0.0;
    for (std::int64_t i = 0; i < n_el; ++i) {
      gmean += n.grad[i];
      gymean += n.grad[i] * yc[i];
    }
    gmean /= static_cast<double>(n_el);
    gymean /= static_cast<double>(n_el);
    for (std::int64_t i = 0; i < n_el; ++i)
      gx[i] += is * (n.grad[i] - gmean - yc[i] * gymean);
  });
}

Var row_mean_removal(const Var& x) {
  const Tensor& xv = x.value();
  if (xv.ndim() != 2) throw std::invalid_argument("row_mean_removal: expects 2-D");
  const std::int64_t c = xv.rows(), t = xv.cols();
  Tensor v({c, t});
  for (std::int64_t i = 0; i < c; ++i) {
    double mu = 0.0;
    for (std::int64_t j = 0; j < t; ++j) mu += xv.at2(i, j);
    mu /= static_cast<double>(t);
    for (std::int64_t j = 0; j < t; ++j) v.at2(i, j) = xv.at2(i, j) - mu;
  }
  auto xn = x.node();
  return Var::make(std::move(v), {x}, [xn, c, t](Node& n) {
    if (!xn->requires_grad) return;
    Tensor& gx = xn->ensure_grad();
    for (std::int64_t i = 0; i < c; ++i) {
      double gmean = 0.0;
      for (std::int64_t j = 0; j < t; ++j) gmean += n.grad.at2(i, j);
      gmean /= static_cast<double>(t);
      for (std::int64_t j = 0; j < t; ++j) gx.at2(i, j) += n.grad.at2(i, j) - gmean;
    }
  });
}

Var channel_bias(const Var& x, const Var& b) {
  const Tensor &xv = x.value(), &bv = b.value();
  if (xv.ndim() != 2 || bv.size() != xv.rows())
    throw std::invalid_argument("channel_bias: bias size must equal channel count");
  const std::int64_t c = xv.rows(), t = xv.cols();
  Tensor v = xv;
  for (std::int64_t i = 0; i < c; ++i)
    for (std::int64_t j = 0; j < t; ++j) v.at2(i, j) += bv[i];
  auto xn = x.node(), bn = b.node();
  return Var::make(std::move(v), {x, b}, [xn, bn, c, t](Node& n) {
    if (xn->requires_grad) axpy(xn->ensure_grad(), n.grad);
    if (bn->requires_grad) {
      Tensor& gb = bn->ensure_grad();
      for (std::int64_t i = 0; i < c; ++i)
        for (std::int64_t j = 0; j < t; ++j) gb[i] += n.grad.at2(i, j);
    }
  });
}

Var film(const Var& x, const Var& scale, const Var& shift) {
  const Tensor& xv = x.value();
  if (xv.ndim() != 2 || scale.value().size() != xv.rows() || shift.value().size() != xv.rows())
    throw std::invalid_argument("film: conditioning size must equal channel count");
  const std::int64_t c = xv.rows(), t = xv.cols();
  Tensor v({c, t});
  for (std::int64_t i = 0; i < c; ++i) {
    const double s = 1.0 + scale.value()[i];
    for (std::int64_t j = 0; j < t; ++j) v.at2(i, j) = xv.at2(i, j) * s + shift.value()[i];
  }
  auto xn = x.node(), sn = scale.node(), hn = shift.node();
  Tensor xc = xv, sc = scale.value();
  return Var::make(std::move(v), {x, scale, shift},
                   [xn, sn, hn, c, t, xc = std::move(xc), sc = std::move(sc)](Node& n) {
                     if (xn->requires_grad) {
                       Tensor& gx = xn->ensure_grad();
                       for (std::int64_t i = 0; i < c; ++i) {
                         const double s = 1.0 + sc[i];
                         for (std::int64_t j = 0; j < t; ++j)
                           gx.at2(i, j) += n.grad.at2(i, j) * s;
                       }
                     }
                     if (sn->requires_grad) {
                       Tensor& gs = sn->ensure_grad();
                       for (std::int64_t i = 0; i < c; ++i)
                         for (std::int64_t j = 0; j < t; ++j)
                           gs[i] += n.grad.at2(i, j) * xc.at2(i, j);
                     }
                     if (hn->requires_grad) {
                       Tensor& gh = hn->ensure_grad();
                       for (std::int64_t i = 0; i < c; ++i)
                         for (std::int64_t j = 0; j < t; ++j) gh[i] += n.grad.at2(i, j);
                     }
                   });
}

Var matvec(const Var& w, const Var& v) {
  const Tensor &wv = w.value(), &vv = v.value();
  if (wv.ndim() != 2 || vv.ndim() != 1 || wv.cols() != vv.size())
    throw std::invalid_argument("matvec: dimension mismatch");
  const std::int64_t o = wv.rows(), in = wv.cols();
  Tensor out({o});
  MapConstMat wm(wv.data(), o, in);
  Eigen::Map<const Eigen::VectorXd> vm(vv.data(), in);
  Eigen::Map<Eigen::VectorXd>(out.data(), o) = wm * vm;
  auto wn = w.node(), vn = v.node();
  Tensor wc = wv, vc = vv;
  return Var::make(std::move(out), {w, v},
                   [wn, vn, o, in, wc = std::move(wc), vc = std::move(vc)](Node& n) {
                     Eigen::Map<const Eigen::VectorXd> g(n.grad.data(), o);
                     if (wn->requires_grad) {
                       Tensor& gw = wn->ensure_grad();
                       MapMat gwm(gw.data(), o, in);
                       gwm.noalias() += g * Eigen::Map<const Eigen::VectorXd>(vc.data(), in).transpose();
                     }
                     if (vn->requires_grad) {
                       Tensor& gv = vn->ensure_grad();
                       Eigen::Map<Eigen::VectorXd> gvm(gv.data(), in);
                       gvm.noalias() += MapConstMat(wc.data(), o, in).transpose() * g;
                     }
                   });
}

Var conv1d_valid(const Var& x, const Var& w, const Var& b, std::int64_t stride) {
  const Tensor &xv = x.value(), &wv = w.value(), &bv = b.value();
  if (xv.ndim() != 2 || wv.ndim() != 3)
    throw std::invalid_argument("conv1d_valid: x must be [C x T], w must be [O x C x K]");
  const std::int64_t c = xv.rows(), t = xv.cols();
  const std::int64_t o = wv.dim(0), wc = wv.dim(1), k = wv.dim(2);
  if (wc != c) throw std::invalid_argument("conv1d_valid: channel mismatch");
  if (bv.size() != o) throw std::invalid_argument("conv1d_valid: bias size mismatch");
  if (stride < 1) throw std::invalid_argument("conv1d_valid: stride must be >= 1");
  if (t < k) throw std::invalid_argument("conv1d_valid: input shorter than kernel");
  const std::int64_t to = (t - k) / stride + 1;

  // im2col: columns are output positions, rows are (channel, tap) pairs.
  Tensor cols({c * k, to});
  for (std::int64_t ci = 0; ci < c; ++ci)
    for (std::int64_t ki = 0; ki < k; ++ki) {
      const std::int64_t r = ci * k + ki;
      for (std::int64_t j = 0; j < to; ++j) cols.at2(r, j) = xv.at2(ci, j * stride + ki);
    }

  Tensor out({o, to});
  {
    MapConstMat wm(wv.data(), o, c * k);
    MapConstMat cm(cols.data(), c * k, to);
    MapMat om(out.data(), o, to);
    om.noalias() = wm * cm;
    for (std::int64_t i = 0; i < o; ++i)
      for (std::int64_t j = 0; j < to; ++j) out.at2(i, j) += bv[i];
  }

  auto xn = x.node(), wn = w.node(), bn = b.node();
  Tensor wcopy = wv;
  return Var::make(
      std::move(out), {x, w, b},
      [xn, wn, bn, c, t, o, k, to, stride, cols = std::move(cols),
       wcopy = std::move(wcopy)](Node& n) {
        MapConstMat g(n.grad.data(), o, to);
        if (bn->requires_grad) {
          Tensor& gb = bn->ensure_grad();
          for (std::int64_t i = 0; i < o; ++i)
            for (std::int64_t j = 0; j < to; ++j) gb[i] += n.grad.at2(i, j);
        }
        if (wn->requires_grad) {
          Tensor& gw = wn->ensure_grad();
          MapMat gwm(gw.data(), o, c * k);
          gwm.noalias() += g * MapConstMat(cols.data(), c * k, to).transpose();
        }
        if (xn->requires_grad) {
          RowMat gcols = MapConstMat(wcopy.data(), o, c * k).transpose() * g;
          Tensor& gx = xn->ensure_grad();
          for (std::int64_t ci = 0; ci < c; ++ci)
            for (std::int64_t ki = 0; ki < k; ++ki) {
              const std::int64_t r = ci * k + ki;
              for (std::int64_t j = 0; j < to; ++j)
                gx.at2(ci, j * stride + ki) += gcols(r, j);
            }
        }
      });
}

Var weight_norm(const Var& v, const Var& g) {
  const Tensor &vv = v.value(), &gv = g.value();
  if (vv.ndim() < 2) throw std::invalid_argument("weight_norm: v must have >= 2 dims");
  const std::int64_t o = vv.dim(0);
  const std::int64_t m = vv.size() / o;
  if (gv.size() != o) throw std::invalid_argument("weight_norm: g size must equal rows");
  Tensor out(vv.shape());
  Tensor norms({o});
  for (std::int64_t i = 0; i < o; ++i) {
    double s = 0.0;
    for (std::int64_t j = 0; j < m; ++j) {
      const double x = vv[i * m + j];
      s += x * x;
    }
    const double nrm = std::sqrt(s) + 1e-12;
    norms[i] = nrm;
    const double sc = gv[i] / nrm;
    for (std::int64_t j = 0; j < m; ++j) out[i * m + j] = vv[i * m + j] * sc;
  }
  auto vn = v.node(), gn = g.node();
  Tensor vc = vv, gc = gv;
  return Var::make(std::move(out), {v, g},
                   [vn, gn, o, m, norms = std::move(norms), vc = std::move(vc),
                    gc = std::move(gc)](Node& n) {
                     for (std::int64_t i = 0; i < o; ++i) {
                       const double nrm = norms[i];
                       double dot = 0.0;  // grad . v_hat
                       for (std::int64_t j = 0; j < m; ++j)
                         dot += n.grad[i * m + j] * vc[i * m + j] / nrm;
                       if (gn->requires_grad) gn->ensure_grad()[i] += dot;
                       if (vn->requires_grad) {
                         Tensor& gvd = vn->ensure_grad();
                         const double sc = gc[i] / nrm;
                         for (std::int64_t j = 0; j < m; ++j) {
                           const double vhat = vc[i * m + j] / nrm;
                           gvd[i * m + j] += sc * (n.grad[i * m + j] - dot * vhat);
                         }
                       }
                     }
                   });
}

Var frame_interp(const Var& mel, std::int64_t hop) {
  const Tensor& mv = mel.value();
  if (mv.ndim() != 2 || hop < 1) throw std::invalid_argument("frame_interp: bad arguments");
  const std::int64_t c = mv.rows(), t = mv.cols();
  Tensor v({1, t * hop});
  for (std::int64_t f = 0; f < t; ++f)
    for (std::int64_t j = 0; j < hop; ++j) {
      double val;
      if (c == 1 || hop == 1) {
        val = mv.at2(0, f);
      } else {
        const double p = static_cast<double>(j) * static_cast<double>(c - 1) /
                         static_cast<double>(hop - 1);
        const std::int64_t i0 = static_cast<std::int64_t>(p);
        const std::int64_t i1 = std::min(i0 + 1, c - 1);
        const double frac = p - static_cast<double>(i0);
        val = (1.0 - frac) * mv.at2(i0, f) + frac * mv.at2(i1, f);
      }
      v.at2(0, f * hop + j) = val;
    }
  auto mn = mel.node();
  return Var::make(std::move(v), {mel}, [mn, c, t, hop](Node& n) {
    if (!mn->requires_grad) return;
    Tensor& gm = mn->ensure_grad();
    for (std::int64_t f = 0; f < t; ++f)
      for (std::int64_t j = 0; j < hop; ++j) {
        const double up = n.grad.at2(0, f * hop + j);
        if (c == 1 || hop == 1) {
          gm.at2(0, f) += up;
        } else {
          const double p = static_cast<double>(j) * static_cast<double>(c - 1) /
                           static_cast<double>(hop - 1);
          const std::int64_t i0 = static_cast<std::int64_t>(p);
          const std::int64_t i1 = std::min(i0 + 1, c - 1);
          const double frac = p - static_cast<double>(i0);
          gm.at2(i0, f) += up * (1.0 - frac);
          gm.at2(i1, f) += up * frac;
        }
      }
  });
}

Var wave_to_period(const Var& wave, std::int64_t period) {
  const Tensor& wv = wave.value();
  if (wv.ndim() != 2 || wv.rows() != 1 || period < 1)
    throw std::invalid_argument("wave_to_period: expects [1 x L]");
  const std::int64_t l = wv.cols();
  const std::int64_t to = (l + period - 1) / period;
  Tensor v({period, to});
  for (std::int64_t r = 0; r < period; ++r)
    for (std::int64_t j = 0; j < to; ++j) {
      const std::int64_t src = j * period + r;
      v.at2(r, j) = src < l ? wv.at2(0, src) : 0.0;
    }
  auto wn = wave.node();
  return Var::make(std::move(v), {wave}, [wn, period, l, to](Node& n) {
    if (!wn->requires_grad) return;
    Tensor& gw = wn->ensure_grad();
    for (std::int64_t r = 0; r < period; ++r)
      for (std::int64_t j = 0; j < to; ++j) {
        const std::int64_t src = j * period + r;
        if (src < l) gw.at2(0, src) += n.grad.at2(r, j);
      }
  });
}

}  // namespace vcd

// Copyright (c) 2026 vcdistill authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "support/gradcheck.hpp"
#include "vcd/nn.hpp"
#include "vcd/ops.hpp"
#include "vcd/rng.hpp"

using namespace vcd;
using vcd::testing::gradcheck_max_rel_error;

TEST_CASE("elementwise ops: values and gradients") {
  Rng rng(7);
  Var a = Var::parameter(rng.normal_tensor({3, 4}));
  Var b = Var::parameter(rng.normal_tensor({3, 4}));

  SUBCASE("add/sub/mul values") {
    Var s = add(a, b);
    for (std::int64_t i = 0; i < 12; ++i)
      CHECK(s.value()[i] == doctest::Approx(a.value()[i] + b.value()[i]));
    Var d = sub(a, b);
    for (std::int64_t i = 0; i < 12; ++i)
      CHECK(d.value()[i] == doctest::Approx(a.value()[i] - b.value()[i]));
  }

  SUBCASE("gradcheck composite expression") {
    auto build = [&] {
      return mean_all(mul(sigmoid(a), tanh_op(add(mul_scalar(b, 0.5), square(a)))));
    };
    CHECK(gradcheck_max_rel_error(build, {a, b}) < 1e-6);
  }

  SUBCASE("leaky_relu gradcheck") {
    auto build = [&] { return mean_all(leaky_relu(sub(a, b), 0.1)); };
    CHECK(gradcheck_max_rel_error(build, {a, b}) < 1e-5);
  }
}

TEST_CASE("structure ops gradients") {
  Rng rng(13);
  Var x = Var::parameter(rng.normal_tensor({6, 9}));

  SUBCASE("glu") {
    auto build = [&] { return mean_all(square(glu(x))); };
    CHECK(gradcheck_max_rel_error(build, {x}) < 1e-6);
  }
  SUBCASE("instance_norm") {
    auto build = [&] { return mean_all(square(instance_norm(x))); };
    CHECK(gradcheck_max_rel_error(build, {x}) < 1e-5);
  }
  SUBCASE("global_stat_norm") {
    auto build = [&] { return mean_all(square(global_stat_norm(x))); };
    CHECK(gradcheck_max_rel_error(build, {x}) < 1e-5);
  }
  SUBCASE("row_mean_removal") {
    auto build = [&] { return mean_all(square(row_mean_removal(x))); };
    CHECK(gradcheck_max_rel_error(build, {x}) < 1e-6);
  }
  SUBCASE("reflect_pad + slice") {
    auto build = [&] {
      return mean_all(square(slice_time(reflect_pad_time(x, 3, 2), 1, 10)));
    };
    CHECK(gradcheck_max_rel_error(build, {x}) < 1e-6);
  }
  SUBCASE("upsample + avg_pool") {
    auto build = [&] { return mean_all(square(avg_pool_time(upsample_nearest(x, 2), 3))); };
    CHECK(gradcheck_max_rel_error(build, {x}) < 1e-6);
  }
  SUBCASE("subsample_time") {
    auto build = [&] { return mean_all(square(subsample_time(x, 2, 1))); };
    CHECK(gradcheck_max_rel_error(build, {x}) < 1e-6);
  }
  SUBCASE("frame_interp") {
    auto build = [&] { return mean_all(square(frame_interp(x, 5))); };
    CHECK(gradcheck_max_rel_error(build, {x}) < 1e-6);
  }
  SUBCASE("wave_to_period") {
    Var w = Var::parameter(rng.normal_tensor({1, 17}));
    auto build = [&] { return mean_all(square(wave_to_period(w, 3))); };
    CHECK(gradcheck_max_rel_error(build, {w}) < 1e-6);
  }
}

TEST_CASE("conditioning and dense ops gradients") {
  Rng rng(29);
  Var x = Var::parameter(rng.normal_tensor({5, 7}));
  Var bias = Var::parameter(rng.normal_tensor({5}));
  Var scale = Var::parameter(rng.normal_tensor({5}, 0.2));

  SUBCASE("channel_bias + film") {
    auto build = [&] { return mean_all(square(film(channel_bias(x, bias), scale, bias))); };
    CHECK(gradcheck_max_rel_error(build, {x, bias, scale}) < 1e-5);
  }
  SUBCASE("matvec") {
    Var w = Var::parameter(rng.normal_tensor({4, 6}));
    Var v = Var::parameter(rng.normal_tensor({6}));
    auto build = [&] { return mean_all(square(matvec(w, v))); };
    CHECK(gradcheck_max_rel_error(build, {w, v}) < 1e-6);
  }
  SUBCASE("weight_norm") {
    Var v = Var::parameter(rng.normal_tensor({4, 3, 2}));
    Var g = Var::parameter(rng.uniform_tensor({4}, 0.5, 1.5));
    auto build = [&] { return mean_all(square(weight_norm(v, g))); };
    CHECK(gradcheck_max_rel_error(build, {v, g}) < 1e-5);
  }
  SUBCASE("conv1d strided") {
    Var xc = Var::parameter(rng.normal_tensor({3, 12}));
    Var w = Var::parameter(rng.normal_tensor({4, 3, 5}));
    Var b = Var::parameter(rng.normal_tensor({4}));
    auto build = [&] { return mean_all(square(conv1d_valid(xc, w, b, 2))); };
    CHECK(gradcheck_max_rel_error(build, {xc, w, b}) < 1e-5);
  }
}

TEST_CASE("conv1d value against direct loop") {
  Rng rng(31);
  Tensor xv = rng.normal_tensor({2, 10});
  Tensor wv = rng.normal_tensor({3, 2, 3});
  Tensor bv = rng.normal_tensor({3});
  Var out = conv1d_valid(Var::constant(xv), Var::constant(wv), Var::constant(bv), 1);
  REQUIRE(out.value().rows() == 3);
  REQUIRE(out.value().cols() == 8);
  for (std::int64_t o = 0; o < 3; ++o)
    for (std::int64_t t = 0; t < 8; ++t) {
      double acc = bv[o];
      for (std::int64_t c = 0; c < 2; ++c)
        for (std::int64_t k = 0; k < 3; ++k)
          acc += wv[(o * 2 + c) * 3 + k] * xv.at2(c, t + k);
      CHECK(out.value().at2(o, t) == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("detach and NoGradGuard block gradient flow") {
  Rng rng(37);
  Var a = Var::parameter(rng.normal_tensor({4}));

  Var l1 = mean_all(square(detach(a)));
  CHECK_FALSE(l1.requires_grad());

  {
    NoGradGuard ng;
    Var l2 = mean_all(square(a));
    CHECK_FALSE(l2.requires_grad());
  }

  Var l3 = mean_all(square(a));
  CHECK(l3.requires_grad());
  backward(l3);
  CHECK(a.has_grad());
}

TEST_CASE("WNConv1d layer: same padding shape law and gradients") {
  Rng rng(41);
  for (int t : {1, 5, 32, 33}) {
    WNConv1d conv(3, 4, 5, 1, rng);
    Var x = Var::parameter(rng.normal_tensor({3, t}));
    Var y = conv.forward(x);
    CHECK(y.value().rows() == 4);
    CHECK(y.value().cols() == t);
  }
  WNConv1d down(3, 4, 4, 2, rng);
  Var x = Var::parameter(rng.normal_tensor({3, 9}));
  CHECK(down.forward(x).value().cols() == 5);  // ceil(9/2)

  WNConv1d conv(2, 3, 3, 1, rng);
  Var xs = Var::parameter(rng.normal_tensor({2, 6}));
  ParamMap pm;
  conv.collect("conv", pm);
  std::vector<Var> params{xs};
  for (auto& [n, p] : pm.items()) params.push_back(p);
  auto build = [&] { return mean_all(square(conv.forward(xs))); };
  CHECK(gradcheck_max_rel_error(build, params) < 1e-5);
}

TEST_CASE("Rng serialization round-trip reproduces the stream") {
  Rng a(123);
  (void)a.normal();
  (void)a.uniform_int(17);
  const std::string state = a.serialize();
  Rng b(0);
  b.deserialize(state);
  for (int i = 0; i < 32; ++i) CHECK(a.uniform() == b.uniform());
}

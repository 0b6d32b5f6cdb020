// Copyright (c) 2026 vcdistill authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vcd/autodiff.hpp"

namespace vcd {

// Elementwise (same shape unless noted).
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var add_scalar(const Var& a, double c);
Var mul_scalar(const Var& a, double c);
Var neg(const Var& a);
Var abs_op(const Var& a);
Var square(const Var& a);
Var sigmoid(const Var& a);
Var tanh_op(const Var& a);
Var leaky_relu(const Var& a, double slope);

/// Mean over all elements -> shape {1}.
Var mean_all(const Var& a);
/// Mean absolute difference -> shape {1}.
Var l1_mean(const Var& a, const Var& b);

double scalar_value(const Var& a);

// 2-D [channels x frames] structure ops.
Var glu(const Var& x);  // [2C x T] -> [C x T], a * sigmoid(b)
Var concat_rows(const Var& a, const Var& b);
Var slice_time(const Var& x, std::int64_t t0, std::int64_t len);
Var reflect_pad_time(const Var& x, std::int64_t left, std::int64_t right);
Var upsample_nearest(const Var& x, std::int64_t factor);
Var avg_pool_time(const Var& x, std::int64_t factor);
Var subsample_time(const Var& x, std::int64_t period, std::int64_t phase = 0);

// Normalizations.
Var instance_norm(const Var& x, double eps = 1e-5);      // per-row over frames
Var global_stat_norm(const Var& x, double eps = 1e-5);   // scalar mean/std over all
Var row_mean_removal(const Var& x);                      // subtract per-row temporal mean

// Conditioning injections.
Var channel_bias(const Var& x, const Var& b);                       // b: [C]
Var film(const Var& x, const Var& scale, const Var& shift);         // per-channel affine

// Dense / conv.
Var matvec(const Var& w, const Var& v);                             // [O x I] * [I]
Var conv1d_valid(const Var& x, const Var& w, const Var& b, std::int64_t stride);
Var weight_norm(const Var& v, const Var& g);                        // rows of v scaled to |g|

// Mel-to-waveform passthrough: each frame column linearly interpolated to
// `hop` samples, concatenated -> [1 x frames*hop].
Var frame_interp(const Var& mel, std::int64_t hop);

/// [1 x L] waveform viewed as period-p lanes -> [p x ceil(L/p)], zero padded.
Var wave_to_period(const Var& wave, std::int64_t period);

}  // namespace vcd

#pragma once

#include <array>
#include <atomic>
#include <utility>
#include <vector>

#include "locotrack/tensor.hpp"

namespace locotrack::nn {

enum class Padding { Same, Valid };

// Cross-correlation of an HxWxCin input with a kh x kw x Cin x Cout kernel.
// "same" pads so that H' = ceil(H/stride); "valid" gives floor((H-kh)/stride)+1.
Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride, Padding padding);

// conv2d plus a per-output-channel bias.
Tensor conv2d_bias(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride,
                   Padding padding);

// Normalizes each channel group of an HxWxC map to zero mean / unit variance
// over (H, W, group channels), then applies the per-channel affine.
Tensor group_norm(const Tensor& x, int groups, const Tensor& gamma, const Tensor& beta,
                  float eps = 1e-5f);

// Per-channel zero mean / unit variance over the spatial extent, no affine.
Tensor instance_norm(const Tensor& x, float eps = 1e-5f);

// Affine map along the last axis: y = x W + b, W is Din x Dout.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// Normalization along the last axis with learned scale/shift.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps = 1e-5f);

Tensor relu(const Tensor& x);
Tensor gelu(const Tensor& x);

// Bilinear interpolation of an HxWxC map at (x, y) points given in grid
// coordinates. Coordinates are clamped to [0, W-1] x [0, H-1].
Tensor bilinear_sample(const Tensor& map, const std::vector<std::pair<double, double>>& pts);

// Single-point variant returning a length-C vector.
std::vector<float> bilinear_sample_point(const Tensor& map, double x, double y);

// Bilinear resize of an HxWxC map to out_h x out_w (half-pixel convention).
Tensor resize_bilinear(const Tensor& map, int out_h, int out_w);

// 21-channel positional code: the raw value followed by sin/cos pairs at
// octave frequencies 2^0 .. 2^9.
constexpr int kSinusoidChannels = 21;
std::array<float, kSinusoidChannels> sinusoidal_encode(double x);

// Max-subtracted softmax along `axis`. -inf entries map to exactly 0.
Tensor softmax(const Tensor& x, int axis);

// Global multiply-add counter for the local-correlation path; the throughput
// benchmark cross-checks its analytic FLOP model against this.
extern std::atomic<uint64_t> g_corr_mac_counter;
void reset_corr_mac_counter();
uint64_t corr_mac_count();

}  // namespace locotrack::nn

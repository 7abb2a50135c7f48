#include "locotrack/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace locotrack::nn {

std::atomic<uint64_t> g_corr_mac_counter{0};
void reset_corr_mac_counter() { g_corr_mac_counter.store(0); }
uint64_t corr_mac_count() { return g_corr_mac_counter.load(); }

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride, Padding padding) {
    require(input.ndim() == 3, "conv2d: input must be HxWxC, got " + input.shape_str());
    require(kernel.ndim() == 4, "conv2d: kernel must be kh x kw x Cin x Cout, got " + kernel.shape_str());
    require(stride >= 1, "conv2d: stride must be positive");
    const int h = input.shape[0], w = input.shape[1], cin = input.shape[2];
    const int kh = kernel.shape[0], kw = kernel.shape[1];
    require(kernel.shape[2] == cin, "conv2d: input channels " + std::to_string(cin) +
                                        " do not match kernel Cin " + std::to_string(kernel.shape[2]) +
                                        " (input " + input.shape_str() + ", kernel " + kernel.shape_str() + ")");
    const int cout = kernel.shape[3];

    int out_h, out_w, pad_top, pad_left;
    if (padding == Padding::Same) {
        out_h = (h + stride - 1) / stride;
        out_w = (w + stride - 1) / stride;
        const int pad_h = std::max((out_h - 1) * stride + kh - h, 0);
        const int pad_w = std::max((out_w - 1) * stride + kw - w, 0);
        pad_top = pad_h / 2;
        pad_left = pad_w / 2;
    } else {
        require(kh <= h && kw <= w, "conv2d: kernel larger than input under valid padding");
        out_h = (h - kh) / stride + 1;
        out_w = (w - kw) / stride + 1;
        pad_top = 0;
        pad_left = 0;
    }

    Tensor out({out_h, out_w, cout});
    for (int oy = 0; oy < out_h; ++oy) {
        for (int ox = 0; ox < out_w; ++ox) {
            float* acc = &out.data[(static_cast<size_t>(oy) * out_w + ox) * cout];
            const int iy0 = oy * stride - pad_top;
            const int ix0 = ox * stride - pad_left;
            for (int ky = 0; ky < kh; ++ky) {
                const int iy = iy0 + ky;
                if (iy < 0 || iy >= h) continue;
                for (int kx = 0; kx < kw; ++kx) {
                    const int ix = ix0 + kx;
                    if (ix < 0 || ix >= w) continue;
                    const float* in_px = &input.data[(static_cast<size_t>(iy) * w + ix) * cin];
                    const float* ker = &kernel.data[(static_cast<size_t>(ky) * kw + kx) * cin * cout];
                    for (int c = 0; c < cin; ++c) {
                        const float v = in_px[c];
                        const float* krow = ker + static_cast<size_t>(c) * cout;
                        for (int oc = 0; oc < cout; ++oc) acc[oc] += v * krow[oc];
                    }
                }
            }
        }
    }
    return out;
}

Tensor conv2d_bias(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride,
                   Padding padding) {
    Tensor out = conv2d(input, kernel, stride, padding);
    const int cout = out.shape[2];
    require(bias.ndim() == 1 && bias.shape[0] == cout, "conv2d: bias length must equal Cout");
    const size_t px = out.data.size() / static_cast<size_t>(cout);
    for (size_t p = 0; p < px; ++p)
        for (int c = 0; c < cout; ++c) out.data[p * cout + c] += bias.data[c];
    return out;
}

Tensor group_norm(const Tensor& x, int groups, const Tensor& gamma, const Tensor& beta, float eps) {
    require(x.ndim() == 3, "group_norm: input must be HxWxC");
    const int h = x.shape[0], w = x.shape[1], c = x.shape[2];
    require(groups >= 1 && c % groups == 0,
            "group_norm: channels " + std::to_string(c) + " not divisible by groups " + std::to_string(groups));
    require(gamma.shape == std::vector<int>{c} && beta.shape == std::vector<int>{c},
            "group_norm: gamma/beta must have length C");
    const int gc = c / groups;
    const int64_t spatial = static_cast<int64_t>(h) * w;

    Tensor out({h, w, c});
    for (int g = 0; g < groups; ++g) {
        double sum = 0.0, sq = 0.0;
        for (int64_t p = 0; p < spatial; ++p)
            for (int cc = g * gc; cc < (g + 1) * gc; ++cc) {
                const double v = x.data[static_cast<size_t>(p) * c + cc];
                sum += v;
                sq += v * v;
            }
        const double n = static_cast<double>(spatial * gc);
        const double mean = sum / n;
        const double var = std::max(sq / n - mean * mean, 0.0);
        const double inv = 1.0 / std::sqrt(var + eps);
        for (int64_t p = 0; p < spatial; ++p)
            for (int cc = g * gc; cc < (g + 1) * gc; ++cc) {
                const size_t idx = static_cast<size_t>(p) * c + cc;
                const double norm = (x.data[idx] - mean) * inv;
                out.data[idx] = static_cast<float>(norm * gamma.data[cc] + beta.data[cc]);
            }
    }
    return out;
}

Tensor instance_norm(const Tensor& x, float eps) {
    require(x.ndim() == 3, "instance_norm: input must be HxWxC");
    const int c = x.shape[2];
    const int64_t spatial = static_cast<int64_t>(x.shape[0]) * x.shape[1];
    Tensor out({x.shape[0], x.shape[1], c});
    for (int cc = 0; cc < c; ++cc) {
        double sum = 0.0, sq = 0.0;
        for (int64_t p = 0; p < spatial; ++p) {
            const double v = x.data[static_cast<size_t>(p) * c + cc];
            sum += v;
            sq += v * v;
        }
        const double mean = sum / static_cast<double>(spatial);
        const double var = std::max(sq / static_cast<double>(spatial) - mean * mean, 0.0);
        const double inv = 1.0 / std::sqrt(var + eps);
        for (int64_t p = 0; p < spatial; ++p) {
            const size_t idx = static_cast<size_t>(p) * c + cc;
            out.data[idx] = static_cast<float>((x.data[idx] - mean) * inv);
        }
    }
    return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    require(w.ndim() == 2, "linear: W must be Din x Dout");
    const int din = w.shape[0], dout = w.shape[1];
    require(x.ndim() >= 1 && x.shape.back() == din,
            "linear: trailing extent of x (" + x.shape_str() + ") does not match Din " + std::to_string(din));
    require(b.shape == std::vector<int>{dout}, "linear: bias length must equal Dout");

    std::vector<int> out_shape = x.shape;
    out_shape.back() = dout;
    Tensor out(out_shape);
    const int64_t rows = x.numel() / din;
    for (int64_t r = 0; r < rows; ++r) {
        const float* in_row = &x.data[static_cast<size_t>(r) * din];
        float* out_row = &out.data[static_cast<size_t>(r) * dout];
        for (int j = 0; j < dout; ++j) out_row[j] = b.data[j];
        for (int i = 0; i < din; ++i) {
            const float v = in_row[i];
            const float* wrow = &w.data[static_cast<size_t>(i) * dout];
            for (int j = 0; j < dout; ++j) out_row[j] += v * wrow[j];
        }
    }
    return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
    const int d = x.shape.back();
    require(gamma.shape == std::vector<int>{d} && beta.shape == std::vector<int>{d},
            "layer_norm: gamma/beta must have length D");
    Tensor out(x.shape);
    const int64_t rows = x.numel() / d;
    for (int64_t r = 0; r < rows; ++r) {
        const float* in = &x.data[static_cast<size_t>(r) * d];
        float* o = &out.data[static_cast<size_t>(r) * d];
        double sum = 0.0, sq = 0.0;
        for (int i = 0; i < d; ++i) {
            sum += in[i];
            sq += static_cast<double>(in[i]) * in[i];
        }
        const double mean = sum / d;
        const double var = std::max(sq / d - mean * mean, 0.0);
        const double inv = 1.0 / std::sqrt(var + eps);
        for (int i = 0; i < d; ++i)
            o[i] = static_cast<float>((in[i] - mean) * inv * gamma.data[i] + beta.data[i]);
    }
    return out;
}

Tensor relu(const Tensor& x) {
    Tensor out(x.shape);
    for (size_t i = 0; i < x.data.size(); ++i) out.data[i] = std::max(x.data[i], 0.0f);
    return out;
}

Tensor gelu(const Tensor& x) {
    Tensor out(x.shape);
    for (size_t i = 0; i < x.data.size(); ++i) {
        const double v = x.data[i];
        out.data[i] = static_cast<float>(0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))));
    }
    return out;
}

std::vector<float> bilinear_sample_point(const Tensor& map, double x, double y) {
    const int h = map.shape[0], w = map.shape[1], c = map.shape[2];
    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fx = x - x0, fy = y - y0;
    const double w00 = (1 - fx) * (1 - fy), w01 = fx * (1 - fy), w10 = (1 - fx) * fy, w11 = fx * fy;
    const float* p00 = &map.data[(static_cast<size_t>(y0) * w + x0) * c];
    const float* p01 = &map.data[(static_cast<size_t>(y0) * w + x1) * c];
    const float* p10 = &map.data[(static_cast<size_t>(y1) * w + x0) * c];
    const float* p11 = &map.data[(static_cast<size_t>(y1) * w + x1) * c];
    std::vector<float> out(static_cast<size_t>(c));
    for (int cc = 0; cc < c; ++cc)
        out[cc] = static_cast<float>(w00 * p00[cc] + w01 * p01[cc] + w10 * p10[cc] + w11 * p11[cc]);
    return out;
}

Tensor bilinear_sample(const Tensor& map, const std::vector<std::pair<double, double>>& pts) {
    if (map.ndim() != 3) throw std::invalid_argument("bilinear_sample: map must be HxWxC");
    const int c = map.shape[2];
    Tensor out({static_cast<int>(pts.size()), c});
    for (size_t i = 0; i < pts.size(); ++i) {
        const auto v = bilinear_sample_point(map, pts[i].first, pts[i].second);
        std::copy(v.begin(), v.end(), out.data.begin() + static_cast<int64_t>(i) * c);
    }
    return out;
}

Tensor resize_bilinear(const Tensor& map, int out_h, int out_w) {
    const int h = map.shape[0], w = map.shape[1], c = map.shape[2];
    if (h == out_h && w == out_w) return map;
    Tensor out({out_h, out_w, c});
    const double sy = static_cast<double>(h) / out_h;
    const double sx = static_cast<double>(w) / out_w;
    for (int oy = 0; oy < out_h; ++oy)
        for (int ox = 0; ox < out_w; ++ox) {
            const double src_x = (ox + 0.5) * sx - 0.5;
            const double src_y = (oy + 0.5) * sy - 0.5;
            const auto v = bilinear_sample_point(map, src_x, src_y);
            std::copy(v.begin(), v.end(), out.data.begin() + (static_cast<int64_t>(oy) * out_w + ox) * c);
        }
    return out;
}

std::array<float, kSinusoidChannels> sinusoidal_encode(double x) {
    std::array<float, kSinusoidChannels> out{};
    out[0] = static_cast<float>(x);
    double freq = 1.0;
    for (int j = 0; j < 10; ++j) {
        out[1 + 2 * j] = static_cast<float>(std::sin(freq * x));
        out[2 + 2 * j] = static_cast<float>(std::cos(freq * x));
        freq *= 2.0;
    }
    return out;
}

Tensor softmax(const Tensor& x, int axis) {
    if (axis < 0) axis += x.ndim();
    if (axis < 0 || axis >= x.ndim()) throw std::invalid_argument("softmax: axis out of range");
    const int n = x.shape[axis];
    int64_t inner = 1;
    for (int a = axis + 1; a < x.ndim(); ++a) inner *= x.shape[a];
    const int64_t outer = x.numel() / (n * inner);

    Tensor out(x.shape);
    for (int64_t o = 0; o < outer; ++o)
        for (int64_t in = 0; in < inner; ++in) {
            const int64_t base = o * n * inner + in;
            float mx = -std::numeric_limits<float>::infinity();
            for (int i = 0; i < n; ++i) mx = std::max(mx, x.data[base + i * inner]);
            if (!(mx > -std::numeric_limits<float>::infinity())) {
                for (int i = 0; i < n; ++i) out.data[base + i * inner] = 0.0f;
                continue;
            }
            double z = 0.0;
            for (int i = 0; i < n; ++i) {
                const float v = x.data[base + i * inner];
                const double e = std::isinf(v) ? 0.0 : std::exp(static_cast<double>(v - mx));
                out.data[base + i * inner] = static_cast<float>(e);
                z += e;
            }
            for (int i = 0; i < n; ++i)
                out.data[base + i * inner] = static_cast<float>(out.data[base + i * inner] / z);
        }
    return out;
}

}  // namespace locotrack::nn

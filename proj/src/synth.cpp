#include "locotrack/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "locotrack/nn.hpp"
#include "locotrack/rng.hpp"

namespace locotrack {

Motion parse_motion(const std::string& name) {
    if (name == "translate") return Motion::Translate;
    if (name == "sine") return Motion::Sine;
    if (name == "occluder") return Motion::Occluder;
    throw std::invalid_argument("unknown motion model '" + name + "'");
}

std::string motion_name(Motion m) {
    switch (m) {
        case Motion::Translate: return "translate";
        case Motion::Sine: return "sine";
        default: return "occluder";
    }
}

void SynthSpec::validate() const {
    if (t < 1) throw std::invalid_argument("synth: T must be >= 1");
    if (h % 8 != 0 || w % 8 != 0) throw std::invalid_argument("synth: H and W must be divisible by 8");
    if (speed < 0.0) throw std::invalid_argument("synth: speed must be non-negative");
    if ((motion == Motion::Translate || motion == Motion::Occluder) &&
        speed * t >= std::min(h, w) / 2.0)
        throw std::invalid_argument("synth: speed too high for in-bounds tracks over " +
                                    std::to_string(t) + " frames");
    if (n_queries < 1) throw std::invalid_argument("synth: n_queries must be >= 1");
}

namespace {

Tensor random_texture(Rng& rng, int h, int w) {
    Tensor tex({h, w, 3});
    for (auto& v : tex.data) v = static_cast<float>(rng.next_unit());
    return tex;
}

// Translating-texture video: content moves right by `speed` px per frame.
// Sampled bilinearly from an extended texture so fractional speeds work.
SynthResult make_translate(const SynthSpec& spec, Rng& rng) {
    const int shift_total = static_cast<int>(std::ceil(spec.speed * spec.t)) + 1;
    Tensor tex = random_texture(rng, spec.h, spec.w + shift_total);

    SynthResult res;
    res.video.frames = Tensor({spec.t, spec.h, spec.w, 3});
    for (int f = 0; f < spec.t; ++f) {
        const double off = shift_total - spec.speed * f;
        for (int y = 0; y < spec.h; ++y)
            for (int x = 0; x < spec.w; ++x) {
                const auto px = nn::bilinear_sample_point(tex, x + off, y);
                for (int c = 0; c < 3; ++c) res.video.frames(f, y, x, c) = px[static_cast<size_t>(c)];
            }
    }

    const double margin = 8.0;
    for (int i = 0; i < spec.n_queries; ++i) {
        GroundTruthTrack gt;
        // Track starts snap to the level-0 feature lattice (even pixels) so
        // matching against patch-identity features is exact at frame 0.
        const double x0 =
            2.0 * std::floor(rng.next_uniform(margin, spec.w - 1 - margin - spec.speed * spec.t) / 2.0);
        const double y0 = 2.0 * std::floor(rng.next_uniform(margin, spec.h - 1 - margin) / 2.0);
        for (int f = 0; f < spec.t; ++f) {
            gt.positions.emplace_back(x0 + spec.speed * f, y0);
            gt.visible.push_back(true);
        }
        res.tracks.push_back(std::move(gt));
    }
    return res;
}

SynthResult make_sine(const SynthSpec& spec, Rng& rng) {
    const int sprite_side = 33;
    Tensor background = random_texture(rng, spec.h, spec.w);
    Tensor sprite = random_texture(rng, sprite_side, sprite_side);

    const double cx = spec.w / 2.0, cy = spec.h / 2.0;
    const double ax = std::max(std::min(spec.speed * spec.t / 4.0, spec.w / 4.0 - sprite_side), 0.0);
    const double ay = std::max(std::min(spec.speed * spec.t / 8.0, spec.h / 4.0 - sprite_side), 0.0);

    auto sprite_origin = [&](int f) -> std::pair<double, double> {
        const double phase = 2.0 * M_PI * f / std::max(spec.t, 2);
        return {cx + ax * std::sin(phase) - sprite_side / 2.0,
                cy + ay * std::cos(phase) - sprite_side / 2.0};
    };

    SynthResult res;
    res.video.frames = Tensor({spec.t, spec.h, spec.w, 3});
    for (int f = 0; f < spec.t; ++f) {
        const auto [ox, oy] = sprite_origin(f);
        const int ix = static_cast<int>(std::lround(ox)), iy = static_cast<int>(std::lround(oy));
        for (int y = 0; y < spec.h; ++y)
            for (int x = 0; x < spec.w; ++x) {
                const bool inside = x >= ix && x < ix + sprite_side && y >= iy && y < iy + sprite_side;
                for (int c = 0; c < 3; ++c)
                    res.video.frames(f, y, x, c) =
                        inside ? sprite(y - iy, x - ix, c) : background(y, x, c);
            }
    }

    for (int i = 0; i < spec.n_queries; ++i) {
        const double qx = rng.next_uniform(4.0, sprite_side - 5.0);
        const double qy = rng.next_uniform(4.0, sprite_side - 5.0);
        GroundTruthTrack gt;
        for (int f = 0; f < spec.t; ++f) {
            const auto [ox, oy] = sprite_origin(f);
            gt.positions.emplace_back(std::lround(ox) + qx, std::lround(oy) + qy);
            gt.visible.push_back(true);
        }
        res.tracks.push_back(std::move(gt));
    }
    return res;
}

SynthResult make_occluder(const SynthSpec& spec, Rng& rng) {
    SynthResult res = make_translate(spec, rng);
    const int bar_w = std::max(spec.w / 8, 8);
    const float bar_color = 0.1f;

    for (int f = 0; f < spec.t; ++f) {
        // Bar sweeps the full width over the clip.
        const int bar_x = static_cast<int>(std::lround(
            static_cast<double>(f) / std::max(spec.t - 1, 1) * (spec.w - bar_w)));
        for (int y = 0; y < spec.h; ++y)
            for (int x = bar_x; x < bar_x + bar_w; ++x)
                for (int c = 0; c < 3; ++c) res.video.frames(f, y, x, c) = bar_color;

        for (auto& gt : res.tracks) {
            const double px = gt.positions[static_cast<size_t>(f)].first;
            if (px >= bar_x && px < bar_x + bar_w) gt.visible[static_cast<size_t>(f)] = false;
        }
    }
    return res;
}

}  // namespace

SynthResult synth_generate(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed ^ fnv1a_hash(motion_name(spec.motion)));
    SynthResult res;
    switch (spec.motion) {
        case Motion::Translate: res = make_translate(spec, rng); break;
        case Motion::Sine: res = make_sine(spec, rng); break;
        case Motion::Occluder: res = make_occluder(spec, rng); break;
    }
    res.video.validate();
    return res;
}

}  // namespace locotrack

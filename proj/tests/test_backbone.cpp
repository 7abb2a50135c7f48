#include <doctest.h>

#include <cmath>

#include "locotrack/backbone.hpp"
#include "locotrack/rng.hpp"

using namespace locotrack;

namespace {

Video random_video(uint64_t seed, int t, int h, int w) {
    Rng rng(seed);
    Video v;
    v.frames = Tensor({t, h, w, 3});
    for (auto& x : v.frames.data) x = static_cast<float>(rng.next_unit());
    return v;
}

double cosine(const float* a, const float* b, int n) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int i = 0; i < n; ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    return dot / (std::sqrt(na) * std::sqrt(nb) + 1e-12);
}

}  // namespace

TEST_CASE("extract_pyramid: stride arithmetic on an 8x8 frame") {
    const Video v = random_video(1, 1, 8, 8);
    const WeightsContainer w = init_weights(Variant::Base, 1);
    const FeaturePyramid pyr = extract_pyramid(v, w);
    CHECK(pyr.levels[0].shape == std::vector<int>{1, 4, 4, 64});
    CHECK(pyr.levels[1].shape == std::vector<int>{1, 2, 2, 128});
    CHECK(pyr.levels[2].shape == std::vector<int>{1, 1, 1, 256});
}

TEST_CASE("extract_pyramid: identical frames give identical features") {
    Video v = random_video(2, 1, 16, 16);
    Video v2;
    v2.frames = Tensor({2, 16, 16, 3});
    std::copy(v.frames.data.begin(), v.frames.data.end(), v2.frames.data.begin());
    std::copy(v.frames.data.begin(), v.frames.data.end(),
              v2.frames.data.begin() + v.frames.numel());
    const WeightsContainer w = init_weights(Variant::Base, 3);
    const FeaturePyramid pyr = extract_pyramid(v2, w);
    for (int l = 0; l < 3; ++l) {
        const Tensor f0 = pyr.level_frame(l, 0);
        const Tensor f1 = pyr.level_frame(l, 1);
        CHECK(f0.data == f1.data);
    }
}

TEST_CASE("extract_pyramid: deterministic across runs and finite") {
    const Video v = random_video(4, 2, 16, 16);
    const WeightsContainer w1 = init_weights(Variant::Base, 42);
    const WeightsContainer w2 = init_weights(Variant::Base, 42);
    const FeaturePyramid a = extract_pyramid(v, w1);
    const FeaturePyramid b = extract_pyramid(v, w2);
    for (int l = 0; l < 3; ++l) {
        CHECK(a.levels[l].data == b.levels[l].data);
        for (float x : a.levels[l].data) CHECK(std::isfinite(x));
    }
}

TEST_CASE("extract_pyramid: missing parameter rejected by key") {
    const Video v = random_video(5, 1, 8, 8);
    WeightsContainer w;
    try {
        extract_pyramid(v, w);
        FAIL("expected rejection");
    } catch (const std::out_of_range& e) {
        CHECK(std::string(e.what()).find("backbone.block0.conv.kernel") != std::string::npos);
    }
}

TEST_CASE("patch_identity_pyramid: constant video gives identical features per level") {
    Video v;
    v.frames = Tensor({1, 16, 16, 3});
    std::fill(v.frames.data.begin(), v.frames.data.end(), 0.5f);
    const FeaturePyramid pyr = patch_identity_pyramid(v);
    CHECK(pyr.levels[0].shape == std::vector<int>{1, 8, 8, 12});
    CHECK(pyr.levels[1].shape == std::vector<int>{1, 4, 4, 48});
    CHECK(pyr.levels[2].shape == std::vector<int>{1, 2, 2, 192});
    for (int l = 0; l < 3; ++l) {
        const Tensor f = pyr.level_frame(l, 0);
        const int c = f.shape[2];
        for (int i = 0; i < f.shape[0]; ++i)
            for (int j = 0; j < f.shape[1]; ++j)
                for (int cc = 0; cc < c; ++cc) CHECK(f(i, j, cc) == f(0, 0, cc));
    }
}

TEST_CASE("patch_identity_pyramid: 2px translate shifts level-0 cells by 1") {
    Rng rng(6);
    Video v;
    v.frames = Tensor({2, 16, 16, 3});
    // Frame 0 random; frame 1 = frame 0 shifted right by 2 px.
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            for (int c = 0; c < 3; ++c) v.frames(0, y, x, c) = static_cast<float>(rng.next_unit());
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            for (int c = 0; c < 3; ++c)
                v.frames(1, y, x, c) = x >= 2 ? v.frames(0, y, x - 2, c) : 0.0f;
    const FeaturePyramid pyr = patch_identity_pyramid(v);
    const Tensor f0 = pyr.level_frame(0, 0);
    const Tensor f1 = pyr.level_frame(0, 1);
    for (int i = 0; i < 8; ++i)
        for (int j = 1; j < 8; ++j)
            for (int c = 0; c < 12; ++c) CHECK(f1(i, j, c) == f0(i, j - 1, c));
}

TEST_CASE("patch_identity_pyramid: self-similarity strictly dominates on random texture") {
    const Video v = random_video(7, 1, 32, 32);
    const FeaturePyramid pyr = patch_identity_pyramid(v);
    const Tensor f = pyr.level_frame(0, 0);
    const int n = f.shape[0] * f.shape[1], c = f.shape[2];
    // Exhaustive: every patch matches itself better than any other patch.
    for (int a = 0; a < n; ++a) {
        const float* pa = &f.data[static_cast<size_t>(a) * c];
        CHECK(cosine(pa, pa, c) == doctest::Approx(1.0));
        for (int b = 0; b < n; ++b) {
            if (a == b) continue;
            CHECK(cosine(pa, &f.data[static_cast<size_t>(b) * c], c) < 1.0 - 1e-4);
        }
    }
}

TEST_CASE("video: dimensions not divisible by 8 rejected") {
    Video v;
    v.frames = Tensor({1, 12, 16, 3});
    CHECK_THROWS_AS(v.validate(), std::invalid_argument);
}

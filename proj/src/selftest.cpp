#include "locotrack/selftest.hpp"

#include <cmath>
#include <limits>

#include "locotrack/corr_encoder.hpp"
#include "locotrack/correlation.hpp"
#include "locotrack/refiner.hpp"
#include "locotrack/rng.hpp"
#include "locotrack/track_init.hpp"

namespace locotrack {

namespace {

Tensor random_map(Rng& rng, std::vector<int> shape, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = static_cast<float>(rng.next_uniform(lo, hi));
    return t;
}

}  // namespace

bool run_selftest(std::string& report) {
    bool all_ok = true;
    auto record = [&](const std::string& name, bool ok, const std::string& detail = "") {
        report += std::string(ok ? "PASS" : "FAIL") + "  " + name;
        if (!detail.empty()) report += "  (" + detail + ")";
        report += "\n";
        all_ok = all_ok && ok;
    };

    // Local 4D correlation vs the quadruple-loop oracle.
    {
        Rng rng(11);
        double max_diff = 0.0;
        for (int rep = 0; rep < 10; ++rep) {
            const Tensor a = random_map(rng, {12, 12, 8});
            const Tensor b = random_map(rng, {12, 12, 8});
            const std::pair<double, double> p{rng.next_uniform(-1.0, 12.0), rng.next_uniform(-1.0, 12.0)};
            const std::pair<double, double> q{rng.next_uniform(0.0, 11.0), rng.next_uniform(0.0, 11.0)};
            const LocalCorr4D fast = local_corr_4d(a, b, p, q, 3, 3);
            const LocalCorr4D slow = local_corr_4d_oracle(a, b, p, q, 3, 3);
            for (size_t i = 0; i < fast.vol.data.size(); ++i)
                max_diff = std::max(max_diff,
                                    std::abs(static_cast<double>(fast.vol.data[i]) - slow.vol.data[i]));
        }
        record("local_corr_4d matches loop oracle", max_diff < 1e-5,
               "max diff " + std::to_string(max_diff));
    }

    // Shape contracts.
    {
        Rng rng(12);
        const Tensor a = random_map(rng, {16, 16, 4});
        const LocalCorr4D vol = local_corr_4d(a, a, {8.0, 8.0}, {8.0, 8.0}, 3, 3);
        const bool vol_ok = vol.vol.shape == std::vector<int>{7, 7, 7, 7};
        record("r=3 volume is 7x7x7x7", vol_ok);

        const WeightsContainer wb = init_weights(Variant::Base, 1);
        const WeightsContainer ws = init_weights(Variant::Small, 1);
        const Tensor eb = encode_corr({vol, vol, vol}, wb, Variant::Base);
        const Tensor es = encode_corr({vol, vol, vol}, ws, Variant::Small);
        record("embedding widths (768 base, 768 small)",
               eb.shape == std::vector<int>{768} && es.shape == std::vector<int>{768});
    }

    // Kernel softargmax delta recovery.
    {
        Tensor map({9, 11});
        map(3, 5) = 1.0f;
        const auto [x, y] = kernel_softargmax(map, 20.0);
        record("kernel_softargmax recovers delta peak",
               std::abs(x - 5.0) < 1e-3 && std::abs(y - 3.0) < 1e-3);
    }

    // Attention bias masking.
    {
        const RefinerConfig cfg = RefinerConfig::for_variant(Variant::Base);
        const Tensor bias = build_bias(5, cfg, BiasTable::default_for_heads(cfg.heads));
        bool ok = true;
        for (int h = 0; h < cfg.heads; ++h)
            for (int t1 = 0; t1 < 5; ++t1)
                for (int t2 = 0; t2 < 5; ++t2) {
                    const bool future = h < cfg.heads / 2 ? t1 < t2 : t1 > t2;
                    const float v = bias(h, t1, t2);
                    if (future != std::isinf(v)) ok = false;
                    if (t1 == t2 && v != 0.0f) ok = false;
                }
        record("attention bias masks the forbidden direction", ok);
    }

    return all_ok;
}

}  // namespace locotrack

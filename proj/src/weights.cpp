#include "locotrack/weights.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "locotrack/rng.hpp"
#include "locotrack/types.hpp"

namespace locotrack {

namespace {

constexpr char kMagic[4] = {'L', 'T', 'W', '1'};

// Token width into the refiner: 2 deltas x 2 coords x 21 channels + occlusion
// logit + 3 levels x 2 branches x 128.
constexpr int kTokenWidth = 84 + 1 + 768;

void append_conv_block(std::vector<ManifestEntry>& m, const std::string& prefix, int k, int cin,
                       int cout, bool with_gn) {
    m.push_back({prefix + ".conv.kernel", {k, k, cin, cout}});
    m.push_back({prefix + ".conv.bias", {cout}});
    if (with_gn) {
        m.push_back({prefix + ".gn.gamma", {cout}});
        m.push_back({prefix + ".gn.beta", {cout}});
    }
}

}  // namespace

Variant parse_variant(const std::string& name) {
    if (name == "S" || name == "s" || name == "small") return Variant::Small;
    if (name == "B" || name == "b" || name == "base") return Variant::Base;
    throw std::invalid_argument("unknown model variant '" + name + "' (expected S or B)");
}

std::string variant_name(Variant v) { return v == Variant::Small ? "S" : "B"; }

RefinerConfig RefinerConfig::for_variant(Variant v) {
    RefinerConfig cfg;
    cfg.variant = v;
    if (v == Variant::Small) {
        cfg.hidden = 256;
        cfg.heads = 4;
    } else {
        cfg.hidden = 384;
        cfg.heads = 6;
    }
    return cfg;
}

std::vector<EncoderBlockSpec> encoder_blocks(Variant v) {
    if (v == Variant::Small) return {{64, 5, 4}, {128, 2, 2}};
    return {{64, 3, 2}, {128, 3, 2}, {128, 2, 2}};
}

const Tensor& WeightsContainer::get(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end())
        throw std::out_of_range("weights: missing parameter tensor '" + name + "'");
    return it->second;
}

bool WeightsContainer::contains(const std::string& name) const { return entries_.count(name) > 0; }

void WeightsContainer::put(const std::string& name, Tensor t) {
    if (!entries_.emplace(name, std::move(t)).second)
        throw std::invalid_argument("weights: duplicate entry name '" + name + "'");
    order_.push_back(name);
}

int64_t WeightsContainer::parameter_count() const {
    int64_t n = 0;
    for (const auto& [name, t] : entries_) n += t.numel();
    return n;
}

std::vector<ManifestEntry> weights_manifest(Variant v) {
    std::vector<ManifestEntry> m;

    // Backbone: three strided conv blocks, widths 64/128/256.
    const int widths[3] = {64, 128, 256};
    int cin = 3;
    for (int b = 0; b < 3; ++b) {
        append_conv_block(m, "backbone.block" + std::to_string(b), 3, cin, widths[b], false);
        cin = widths[b];
    }

    // Stage I head: L-channel fusion conv plus [max;avg]-pooled occlusion head.
    m.push_back({"init.fuse.kernel", {3, 3, kPyramidLevels, 1}});
    m.push_back({"init.fuse.bias", {1}});
    m.push_back({"init.occl.weight", {2 * kPyramidLevels, 1}});
    m.push_back({"init.occl.bias", {1}});

    // Correlation encoder: per level, two independent branches.
    const auto blocks = encoder_blocks(v);
    for (int l = 0; l < kPyramidLevels; ++l)
        for (int br = 0; br < 2; ++br) {
            int c = (2 * kCorrRadius + 1) * (2 * kCorrRadius + 1);  // flattened far-side dims
            for (size_t b = 0; b < blocks.size(); ++b) {
                append_conv_block(m,
                                  "encoder.level" + std::to_string(l) + ".branch" + std::to_string(br) +
                                      ".block" + std::to_string(b),
                                  blocks[b].kernel, c, blocks[b].channels, true);
                c = blocks[b].channels;
            }
        }

    // Refiner transformer.
    const RefinerConfig cfg = RefinerConfig::for_variant(v);
    const int h = cfg.hidden;
    const int mlp = static_cast<int>(h * cfg.mlp_ratio);
    m.push_back({"refiner.input_proj.weight", {kTokenWidth, h}});
    m.push_back({"refiner.input_proj.bias", {h}});
    for (int b = 0; b < cfg.n_layers; ++b) {
        const std::string p = "refiner.block" + std::to_string(b);
        m.push_back({p + ".ln1.gamma", {h}});
        m.push_back({p + ".ln1.beta", {h}});
        for (const char* w : {"wq", "wk", "wv", "wo"}) m.push_back({p + ".attn." + std::string(w), {h, h}});
        for (const char* bn : {"bq", "bk", "bv", "bo"}) m.push_back({p + ".attn." + std::string(bn), {h}});
        m.push_back({p + ".ln2.gamma", {h}});
        m.push_back({p + ".ln2.beta", {h}});
        m.push_back({p + ".mlp.w1", {h, mlp}});
        m.push_back({p + ".mlp.b1", {mlp}});
        m.push_back({p + ".mlp.w2", {mlp, h}});
        m.push_back({p + ".mlp.b2", {h}});
    }
    m.push_back({"refiner.ln_final.gamma", {h}});
    m.push_back({"refiner.ln_final.beta", {h}});
    m.push_back({"refiner.out_head.weight", {h, 3}});
    m.push_back({"refiner.out_head.bias", {3}});
    return m;
}

WeightsContainer init_weights(Variant v, uint64_t seed) {
    WeightsContainer w;
    for (const auto& entry : weights_manifest(v)) {
        Tensor t(entry.shape);
        const bool zero_head = entry.name.rfind("refiner.out_head", 0) == 0;
        const bool is_bias = entry.name.find(".bias") != std::string::npos ||
                             entry.name.find(".beta") != std::string::npos ||
                             entry.name.find(".b1") != std::string::npos ||
                             entry.name.find(".b2") != std::string::npos ||
                             entry.name.find(".attn.b") != std::string::npos;
        const bool is_gamma = entry.name.find(".gamma") != std::string::npos;
        if (zero_head || is_bias) {
            // zeros
        } else if (is_gamma) {
            std::fill(t.data.begin(), t.data.end(), 1.0f);
        } else {
            // fan-in = product of all extents except the last (output) axis
            int64_t fan_in = 1;
            for (size_t i = 0; i + 1 < entry.shape.size(); ++i) fan_in *= entry.shape[i];
            const double limit = std::sqrt(1.0 / static_cast<double>(fan_in));
            Rng rng(seed ^ fnv1a_hash(entry.name));
            for (auto& x : t.data) x = static_cast<float>(rng.next_uniform(-limit, limit));
        }
        w.put(entry.name, std::move(t));
    }
    return w;
}

namespace {

void write_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& is, const std::string& ctx) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw std::runtime_error("weights: truncated file while reading " + ctx);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void save_weights(const WeightsContainer& w, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("weights: cannot open '" + path + "' for writing");
    os.write(kMagic, 4);
    write_u32(os, static_cast<uint32_t>(w.size()));
    for (const auto& name : w.names()) {
        const Tensor& t = w.get(name);
        write_u32(os, static_cast<uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u32(os, static_cast<uint32_t>(t.ndim()));
        for (int e : t.shape) write_u32(os, static_cast<uint32_t>(e));
        static_assert(sizeof(float) == 4);
        os.write(reinterpret_cast<const char*>(t.data.data()),
                 static_cast<std::streamsize>(t.data.size() * 4));
    }
    if (!os) throw std::runtime_error("weights: write to '" + path + "' failed");
}

WeightsContainer load_weights(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("weights: cannot open '" + path + "'");
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("weights: bad magic in '" + path + "' (expected LTW1)");
    const uint32_t count = read_u32(is, "entry count");
    WeightsContainer w;
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t name_len = read_u32(is, "name length");
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len))
            throw std::runtime_error("weights: truncated file while reading entry name");
        const uint32_t ndim = read_u32(is, "ndim of " + name);
        std::vector<int> shape(ndim);
        int64_t n = 1;
        for (uint32_t d = 0; d < ndim; ++d) {
            shape[d] = static_cast<int>(read_u32(is, "extent of " + name));
            n *= shape[d];
        }
        Tensor t(shape);
        if (!is.read(reinterpret_cast<char*>(t.data.data()), n * 4))
            throw std::runtime_error("weights: truncated file while reading data of '" + name + "'");
        w.put(name, std::move(t));
    }
    return w;
}

void validate_weights(const WeightsContainer& w, Variant v) {
    for (const auto& entry : weights_manifest(v)) {
        if (!w.contains(entry.name))
            throw std::runtime_error("weights: variant " + variant_name(v) +
                                     " requires missing parameter '" + entry.name + "'");
        const Tensor& t = w.get(entry.name);
        if (t.shape != entry.shape) {
            Tensor expected(entry.shape);
            throw std::runtime_error("weights: parameter '" + entry.name + "' has shape " +
                                     t.shape_str() + ", expected " + expected.shape_str());
        }
    }
}

}  // namespace locotrack

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "locotrack/tensor.hpp"

namespace locotrack {

enum class Variant { Small, Base };

Variant parse_variant(const std::string& name);  // "S" or "B"
std::string variant_name(Variant v);

struct RefinerConfig {
    int n_layers = 3;   // N_S
    int hidden = 384;
    int heads = 6;      // N_h, even
    double mlp_ratio = 4.0;
    int iterations = 4;  // K
    Variant variant = Variant::Base;

    static RefinerConfig for_variant(Variant v);
};

// Encoder block geometry from the published layer table.
struct EncoderBlockSpec {
    int channels;
    int kernel;
    int stride;
};
std::vector<EncoderBlockSpec> encoder_blocks(Variant v);

// Named-tensor archive. Entry order is preserved for serialization.
class WeightsContainer {
public:
    const Tensor& get(const std::string& name) const;
    bool contains(const std::string& name) const;
    void put(const std::string& name, Tensor t);  // rejects duplicates
    size_t size() const { return order_.size(); }
    const std::vector<std::string>& names() const { return order_; }

    int64_t parameter_count() const;

private:
    std::map<std::string, Tensor> entries_;
    std::vector<std::string> order_;
};

struct ManifestEntry {
    std::string name;
    std::vector<int> shape;
};

// Full required parameter set for a variant (backbone, init head, encoder,
// refiner).
std::vector<ManifestEntry> weights_manifest(Variant v);

// Fan-in-scaled uniform init, seeded per tensor name. Refiner output head is
// zero so an untrained refine pass is the identity.
WeightsContainer init_weights(Variant v, uint64_t seed);

// "LTW1" container: u32-le entry count; per entry u32 name length, UTF-8
// name, u32 ndim, ndim u32 extents, then float32-le values row-major.
void save_weights(const WeightsContainer& w, const std::string& path);
WeightsContainer load_weights(const std::string& path);

// Shape-checks a container against the variant manifest; throws naming the
// first missing or mis-shaped key.
void validate_weights(const WeightsContainer& w, Variant v);

}  // namespace locotrack

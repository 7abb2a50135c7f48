#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "locotrack/types.hpp"

namespace locotrack {

enum class Motion { Translate, Sine, Occluder };
Motion parse_motion(const std::string& name);
std::string motion_name(Motion m);

struct SynthSpec {
    uint64_t seed = 0;
    int t = 24;
    int h = 256;
    int w = 256;
    Motion motion = Motion::Translate;
    double speed = 2.0;  // px/frame
    int n_queries = 16;

    void validate() const;
};

struct SynthResult {
    Video video;
    std::vector<GroundTruthTrack> tracks;
};

// Seeded random RGB texture, moved per the spec's motion model, with exact
// ground-truth tracks (and occlusion flags under the occluder model).
SynthResult synth_generate(const SynthSpec& spec);

}  // namespace locotrack

#pragma once

#include <utility>

#include "locotrack/types.hpp"
#include "locotrack/weights.hpp"

namespace locotrack {

constexpr double kSoftargmaxTau = 20.0;
constexpr double kSoftargmaxSigma = 2.5;  // Gaussian window std, grid cells

// Softmax expectation of cell coordinates restricted by a Gaussian window
// around the hard argmax (ties resolved toward the map center, then row-major
// scan order). Returns (x, y) in the map's own grid coordinates.
std::pair<double, double> kernel_softargmax(const Tensor& map, double tau,
                                            double sigma_g = kSoftargmaxSigma);

// Stage I: fuse the L correlation channels with a 3x3 conv, soft-argmax each
// frame's map (level-0 grid, rescaled by stride 2 to pixels), and derive the
// occlusion logit from per-channel [max; avg] pooling through a linear head.
std::pair<Track, OcclusionTrack> init_track(const GlobalCorr& gc, const WeightsContainer& weights,
                                            double tau = kSoftargmaxTau);

}  // namespace locotrack

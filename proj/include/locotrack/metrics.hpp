#pragma once

#include <array>
#include <string>
#include <vector>

#include "locotrack/types.hpp"

namespace locotrack {

// TAP-Vid error thresholds, in 256x256 coordinate units.
constexpr std::array<double, 5> kPckThresholds = {1.0, 2.0, 4.0, 8.0, 16.0};

struct MetricsReport {
    double aj = 0.0;
    double pck_avg = 0.0;
    std::array<double, 5> pck_per_threshold{};
    double oa = 0.0;
    int n_points = 0;
    bool degenerate_flag = false;  // some Jaccard threshold was vacuous
};

struct PckResult {
    double avg = 0.0;
    std::array<double, 5> per_threshold{};
    bool has_visible = false;
};

// Fraction of gt-visible frames with L2 error under each threshold.
// Positions must already be in the threshold coordinate frame.
PckResult pck(const Track& pred, const GroundTruthTrack& gt);

// Binary accuracy of visible/occluded over all frames; predicted visible iff
// probability > 0.5 (strict).
double occlusion_accuracy(const OcclusionTrack& pred_occl, const GroundTruthTrack& gt);

struct JaccardResult {
    double aj = 0.0;
    bool degenerate = false;
};

// Mean over thresholds of TP / (TP + FP + FN); a threshold with no TP, FP or
// FN contributes 1.0 and sets the degenerate flag.
JaccardResult average_jaccard(const Track& pred, const OcclusionTrack& pred_occl,
                              const GroundTruthTrack& gt);

enum class QueryMode { Strided, First };
QueryMode parse_query_mode(const std::string& name);

// Strided: visible frames on the every-5 grid; First: the earliest visible
// frame only. Query positions come from the ground truth at that frame.
std::vector<QueryPoint> sample_queries(const GroundTruthTrack& gt, QueryMode mode);

// Rescales positions from (width, height) to the 256x256 metric frame.
Track rescale_track(const Track& t, int width, int height);
GroundTruthTrack rescale_gt(const GroundTruthTrack& t, int width, int height);

// Aggregate over per-query (pred, gt) pairs, all in the metric frame.
MetricsReport aggregate_metrics(const std::vector<Track>& preds,
                                const std::vector<OcclusionTrack>& pred_occls,
                                const std::vector<GroundTruthTrack>& gts);

}  // namespace locotrack

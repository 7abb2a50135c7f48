#include "locotrack/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace locotrack {

namespace {

double l2_error(const std::pair<double, double>& a, const std::pair<double, double>& b) {
    const double dx = a.first - b.first, dy = a.second - b.second;
    return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

PckResult pck(const Track& pred, const GroundTruthTrack& gt) {
    if (pred.length() != gt.length())
        throw std::invalid_argument("pck: track lengths disagree (" + std::to_string(pred.length()) +
                                    " vs " + std::to_string(gt.length()) + ")");
    PckResult res;
    int visible = 0;
    std::array<int, 5> correct{};
    for (int t = 0; t < gt.length(); ++t) {
        if (!gt.visible[static_cast<size_t>(t)]) continue;
        ++visible;
        const double err = l2_error(pred.positions[static_cast<size_t>(t)],
                                    gt.positions[static_cast<size_t>(t)]);
        for (size_t k = 0; k < kPckThresholds.size(); ++k)
            if (err < kPckThresholds[k]) ++correct[k];
    }
    if (visible == 0) return res;  // has_visible stays false; caller excludes the track
    res.has_visible = true;
    for (size_t k = 0; k < kPckThresholds.size(); ++k) {
        res.per_threshold[k] = static_cast<double>(correct[k]) / visible;
        res.avg += res.per_threshold[k];
    }
    res.avg /= static_cast<double>(kPckThresholds.size());
    return res;
}

double occlusion_accuracy(const OcclusionTrack& pred_occl, const GroundTruthTrack& gt) {
    if (pred_occl.length() != gt.length())
        throw std::invalid_argument("occlusion_accuracy: track lengths disagree");
    int correct = 0;
    for (int t = 0; t < gt.length(); ++t) {
        const bool pred_visible = pred_occl.probability(t) > 0.5;
        if (pred_visible == gt.visible[static_cast<size_t>(t)]) ++correct;
    }
    return static_cast<double>(correct) / gt.length();
}

JaccardResult average_jaccard(const Track& pred, const OcclusionTrack& pred_occl,
                              const GroundTruthTrack& gt) {
    if (pred.length() != gt.length() || pred_occl.length() != gt.length())
        throw std::invalid_argument("average_jaccard: track lengths disagree");
    JaccardResult res;
    for (const double thr : kPckThresholds) {
        int tp = 0, fp = 0, fn = 0;
        for (int t = 0; t < gt.length(); ++t) {
            const bool pred_visible = pred_occl.probability(t) > 0.5;
            const bool gt_visible = gt.visible[static_cast<size_t>(t)];
            const bool within =
                gt_visible && l2_error(pred.positions[static_cast<size_t>(t)],
                                       gt.positions[static_cast<size_t>(t)]) < thr;
            if (pred_visible && within)
                ++tp;
            else if (pred_visible && !within)
                ++fp;
            else if (!pred_visible && gt_visible)
                ++fn;
        }
        if (tp + fp + fn == 0) {
            res.aj += 1.0;  // vacuous threshold
            res.degenerate = true;
        } else {
            res.aj += static_cast<double>(tp) / (tp + fp + fn);
        }
    }
    res.aj /= static_cast<double>(kPckThresholds.size());
    return res;
}

QueryMode parse_query_mode(const std::string& name) {
    if (name == "strided") return QueryMode::Strided;
    if (name == "first") return QueryMode::First;
    throw std::invalid_argument("unknown query mode '" + name + "' (expected strided or first)");
}

std::vector<QueryPoint> sample_queries(const GroundTruthTrack& gt, QueryMode mode) {
    std::vector<QueryPoint> out;
    if (mode == QueryMode::First) {
        for (int t = 0; t < gt.length(); ++t)
            if (gt.visible[static_cast<size_t>(t)]) {
                out.push_back({gt.positions[static_cast<size_t>(t)].first,
                               gt.positions[static_cast<size_t>(t)].second, t});
                break;
            }
        return out;
    }
    // Strided: every-5 grid intersected with visibility; occluded grid points
    // are skipped, not substituted.
    for (int t = 0; t < gt.length(); t += 5)
        if (gt.visible[static_cast<size_t>(t)])
            out.push_back({gt.positions[static_cast<size_t>(t)].first,
                           gt.positions[static_cast<size_t>(t)].second, t});
    return out;
}

Track rescale_track(const Track& t, int width, int height) {
    Track out = t;
    const double sx = 256.0 / width, sy = 256.0 / height;
    for (auto& p : out.positions) {
        p.first *= sx;
        p.second *= sy;
    }
    return out;
}

GroundTruthTrack rescale_gt(const GroundTruthTrack& t, int width, int height) {
    GroundTruthTrack out = t;
    const double sx = 256.0 / width, sy = 256.0 / height;
    for (auto& p : out.positions) {
        p.first *= sx;
        p.second *= sy;
    }
    return out;
}

MetricsReport aggregate_metrics(const std::vector<Track>& preds,
                                const std::vector<OcclusionTrack>& pred_occls,
                                const std::vector<GroundTruthTrack>& gts) {
    if (preds.size() != gts.size() || pred_occls.size() != gts.size())
        throw std::invalid_argument("aggregate_metrics: prediction/ground-truth counts disagree");
    MetricsReport rep;
    int counted = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
        const PckResult p = pck(preds[i], gts[i]);
        if (!p.has_visible) continue;  // flagged exclusion: no visible frames
        const JaccardResult j = average_jaccard(preds[i], pred_occls[i], gts[i]);
        rep.pck_avg += p.avg;
        for (size_t k = 0; k < kPckThresholds.size(); ++k) rep.pck_per_threshold[k] += p.per_threshold[k];
        rep.aj += j.aj;
        rep.degenerate_flag = rep.degenerate_flag || j.degenerate;
        rep.oa += occlusion_accuracy(pred_occls[i], gts[i]);
        ++counted;
    }
    rep.n_points = counted;
    if (counted > 0) {
        rep.pck_avg /= counted;
        for (auto& v : rep.pck_per_threshold) v /= counted;
        rep.aj /= counted;
        rep.oa /= counted;
    }
    return rep;
}

}  // namespace locotrack

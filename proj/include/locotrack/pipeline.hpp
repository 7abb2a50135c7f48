#pragma once

#include <string>
#include <vector>

#include "locotrack/io.hpp"
#include "locotrack/metrics.hpp"
#include "locotrack/types.hpp"
#include "locotrack/weights.hpp"

namespace locotrack {

enum class RefinerMode { Learned, Argmax, None };
RefinerMode parse_refiner_mode(const std::string& name);

enum class BackboneMode { Learned, PatchIdentity };

struct TrackOptions {
    Variant variant = Variant::Base;
    RefinerMode refiner = RefinerMode::Learned;
    BackboneMode backbone = BackboneMode::Learned;
    int iterations = 4;  // K; 0 keeps the Stage I track
    double tau = 20.0;
    bool keep_history = true;
    int workers = 0;  // 0: LOCOTRACK_WORKERS env var, else hardware concurrency
};

// Full pipeline over a query list: pyramid, global correlation, Stage I,
// Stage II. Queries are independent and run on a worker pool.
TrackFile run_track(const Video& video, const std::vector<QueryRecord>& queries,
                    const WeightsContainer& weights, const TrackOptions& opts);

// Associates predictions with ground-truth tracks via the query sampling mode
// and computes the TAP-Vid metrics in the 256x256 frame.
MetricsReport run_eval(const TrackFile& pred, const GroundTruthFile& gt, QueryMode mode);

struct BenchEntry {
    int n_points = 0;
    double seconds = 0.0;
    double points_per_second = 0.0;
    uint64_t measured_corr_macs = 0;   // instrumented counter, whole run
    uint64_t analytic_corr_macs = 0;   // closed form, whole run
    double gflops_per_point = 0.0;     // analytic, full refinement path
};

struct BenchReport {
    Variant variant;
    int t = 0, h = 0, w = 0;
    std::vector<BenchEntry> entries;
};

// Synthetic-input throughput harness with analytic FLOP accounting for the
// refinement path, cross-checked against the instrumented MAC counter.
BenchReport run_bench(Variant variant, int t, int h, int w, const std::vector<int>& n_points_list,
                      uint64_t seed, int workers = 0);

std::string serialize_bench_report(const BenchReport& rep);

// Closed-form multiply-add count of the local-correlation path for one point:
// per level and iteration, neighborhood norms plus the all-pair products.
uint64_t analytic_corr_macs_per_point(int t, int iterations, const std::vector<int>& channel_widths,
                                      int radius);

// Analytic FLOPs per point for the full refinement path (correlation,
// encoder, transformer), used for the bench report.
double analytic_refinement_gflops_per_point(Variant v, int t, int iterations,
                                            const std::vector<int>& channel_widths, int radius);

// Track overlay rendering for --render-overlays.
void render_overlays(const Video& video, const TrackFile& tf, const std::string& dir);

}  // namespace locotrack

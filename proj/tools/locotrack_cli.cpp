// Command-line front end for the locotrack shared library. Talks to the core
// exclusively through the C API in locotrack.h.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "locotrack.h"

namespace {

int die(lt_status st, const std::string& what) {
    std::cerr << "error: " << what << ": " << lt_last_error() << " (status " << st << ")\n";
    return 1;
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        std::cerr << "error: cannot open '" << path << "'\n";
        std::exit(1);
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        std::cerr << "error: cannot write '" << path << "'\n";
        std::exit(1);
    }
    os << text;
}

struct OwnedString {
    char* p = nullptr;
    ~OwnedString() { lt_string_free(p); }
    std::string str() const { return p ? std::string(p) : std::string(); }
};

struct ModelHandle {
    lt_model* p = nullptr;
    ~ModelHandle() { lt_model_destroy(p); }
};

struct VideoHandle {
    lt_video* p = nullptr;
    ~VideoHandle() { lt_video_destroy(p); }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"locotrack: two-stage long-range point tracking"};
    app.set_config("--config");
    app.require_subcommand(1);

    // track
    auto* track = app.add_subcommand("track", "run the tracking pipeline on a video");
    std::string video_path, queries_path, weights_path, out_path = "tracks.json";
    std::string variant = "B", refiner = "learned", overlays_dir;
    uint64_t seed = 0;
    int iterations = 4, workers = 0;
    double tau = 20.0;
    bool patch_identity = false, no_history = false;
    track->add_option("--video", video_path, "PNG frame directory or raw video tensor")->required();
    track->add_option("--queries", queries_path, "query points JSON")->required();
    track->add_option("--weights", weights_path, "LTW1 weights container (default: seeded init)");
    track->add_option("--out", out_path, "output track file (JSON)");
    track->add_option("--variant", variant, "model variant: S or B");
    track->add_option("--refiner", refiner, "refiner: learned, argmax or none");
    track->add_option("--iterations", iterations, "refinement iterations K");
    track->add_option("--tau", tau, "softargmax temperature");
    track->add_option("--seed", seed, "weight init seed when --weights is absent");
    track->add_option("--workers", workers, "worker threads (0 = auto)");
    track->add_flag("--patch-identity-backbone", patch_identity, "use the parameter-free test backbone");
    track->add_flag("--no-history", no_history, "omit per-iteration history from the output");
    track->add_option("--render-overlays", overlays_dir, "also write per-frame overlay PNGs here");

    // eval
    auto* eval = app.add_subcommand("eval", "TAP-Vid metrics for a track file");
    std::string pred_path, gt_path, mode = "strided", report_path;
    eval->add_option("--pred", pred_path, "predicted track file (JSON)")->required();
    eval->add_option("--gt", gt_path, "ground-truth JSON")->required();
    eval->add_option("--mode", mode, "query mode: strided or first");
    eval->add_option("--out", report_path, "also write the report JSON here");

    // bench
    auto* bench = app.add_subcommand("bench", "throughput and FLOP accounting");
    std::string bench_variant = "S";
    int bench_t = 8, bench_h = 256, bench_w = 256, bench_workers = 0;
    uint64_t bench_seed = 7;
    std::vector<int> n_points{1, 10, 100};
    std::string bench_out;
    bench->add_option("--variant", bench_variant, "model variant: S or B");
    bench->add_option("--frames", bench_t, "video length T");
    bench->add_option("--height", bench_h, "frame height");
    bench->add_option("--width", bench_w, "frame width");
    bench->add_option("--n-points", n_points, "query point counts to measure");
    bench->add_option("--seed", bench_seed, "synthetic input seed");
    bench->add_option("--workers", bench_workers, "worker threads (0 = auto)");
    bench->add_option("--out", bench_out, "also write the report JSON here");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic clip with ground truth");
    uint64_t synth_seed = 0;
    int synth_t = 24, synth_h = 256, synth_w = 256, synth_queries = 16;
    std::string motion = "translate", synth_mode = "strided";
    double speed = 2.0;
    std::string video_out = "video.ltv", gt_out = "gt.json", queries_out = "queries.json", png_dir;
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--frames", synth_t, "video length T");
    synth->add_option("--height", synth_h, "frame height (divisible by 8)");
    synth->add_option("--width", synth_w, "frame width (divisible by 8)");
    synth->add_option("--motion", motion, "translate, sine or occluder");
    synth->add_option("--speed", speed, "motion speed in px/frame");
    synth->add_option("--n-queries", synth_queries, "number of ground-truth tracks");
    synth->add_option("--query-mode", synth_mode, "query sampling for queries.json: strided or first");
    synth->add_option("--video-out", video_out, "raw video tensor output path");
    synth->add_option("--gt-out", gt_out, "ground-truth JSON output path");
    synth->add_option("--queries-out", queries_out, "queries JSON output path");
    synth->add_option("--png-dir", png_dir, "also dump frames as PNGs here");

    // selftest
    auto* selftest = app.add_subcommand("selftest", "run the built-in oracle checks");

    CLI11_PARSE(app, argc, argv);

    if (track->parsed()) {
        ModelHandle model;
        lt_status st = weights_path.empty()
                           ? lt_model_create(variant.c_str(), seed, &model.p)
                           : lt_model_load(weights_path.c_str(), variant.c_str(), &model.p);
        if (st != LT_OK) return die(st, "loading model");

        VideoHandle video;
        st = lt_video_load(video_path.c_str(), &video.p);
        if (st != LT_OK) return die(st, "loading video");

        lt_track_options opts;
        lt_track_options_init(&opts);
        opts.refiner = refiner.c_str();
        opts.iterations = iterations;
        opts.tau = tau;
        opts.use_patch_identity_backbone = patch_identity ? 1 : 0;
        opts.keep_history = no_history ? 0 : 1;
        opts.workers = workers;

        const std::string queries = slurp(queries_path);
        OwnedString result;
        st = lt_track_run(model.p, video.p, queries.c_str(), &opts, &result.p);
        if (st != LT_OK) return die(st, "tracking");
        spit(out_path, result.str());
        std::cout << "wrote " << out_path << "\n";

        if (!overlays_dir.empty()) {
            st = lt_render_overlays(video.p, result.p, overlays_dir.c_str());
            if (st != LT_OK) return die(st, "rendering overlays");
            std::cout << "wrote overlays to " << overlays_dir << "\n";
        }
        return 0;
    }

    if (eval->parsed()) {
        const std::string pred = slurp(pred_path);
        const std::string gt = slurp(gt_path);
        OwnedString report;
        const lt_status st = lt_eval_run(pred.c_str(), gt.c_str(), mode.c_str(), &report.p);
        if (st != LT_OK) return die(st, "evaluating");
        std::cout << report.str();
        if (!report_path.empty()) spit(report_path, report.str());
        return 0;
    }

    if (bench->parsed()) {
        OwnedString report;
        const lt_status st =
            lt_bench_run(bench_variant.c_str(), bench_t, bench_h, bench_w, n_points.data(),
                         n_points.size(), bench_seed, bench_workers, &report.p);
        if (st != LT_OK) return die(st, "benchmarking");
        std::cout << report.str();
        if (!bench_out.empty()) spit(bench_out, report.str());
        return 0;
    }

    if (synth->parsed()) {
        char spec[256];
        std::snprintf(spec, sizeof(spec),
                      "{\"seed\":%llu,\"t\":%d,\"h\":%d,\"w\":%d,\"motion\":\"%s\",\"speed\":%g,"
                      "\"n_queries\":%d}",
                      static_cast<unsigned long long>(synth_seed), synth_t, synth_h, synth_w,
                      motion.c_str(), speed, synth_queries);
        VideoHandle video;
        OwnedString gt, queries;
        lt_status st = lt_synth(spec, synth_mode.c_str(), &video.p, &gt.p, &queries.p);
        if (st != LT_OK) return die(st, "generating");
        st = lt_video_save_tensor(video.p, video_out.c_str());
        if (st != LT_OK) return die(st, "writing video");
        spit(gt_out, gt.str());
        spit(queries_out, queries.str());
        if (!png_dir.empty()) {
            st = lt_video_save_pngs(video.p, png_dir.c_str());
            if (st != LT_OK) return die(st, "writing PNGs");
        }
        std::cout << "wrote " << video_out << ", " << gt_out << ", " << queries_out << "\n";
        return 0;
    }

    if (selftest->parsed()) {
        OwnedString report;
        const lt_status st = lt_selftest(&report.p);
        std::cout << report.str();
        if (st != LT_OK) {
            std::cerr << "selftest failed\n";
            return 1;
        }
        std::cout << "all selftest checks passed\n";
        return 0;
    }

    return 0;
}

#include "locotrack/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "locotrack/backbone.hpp"
#include "locotrack/corr_encoder.hpp"
#include "locotrack/correlation.hpp"
#include "locotrack/nn.hpp"
#include "locotrack/refiner.hpp"
#include "locotrack/rng.hpp"
#include "locotrack/synth.hpp"
#include "locotrack/track_init.hpp"

namespace locotrack {

RefinerMode parse_refiner_mode(const std::string& name) {
    if (name == "learned") return RefinerMode::Learned;
    if (name == "argmax") return RefinerMode::Argmax;
    if (name == "none") return RefinerMode::None;
    throw std::invalid_argument("unknown refiner mode '" + name + "'");
}

namespace {

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("LOCOTRACK_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

TrackRecord track_one_query(const FeaturePyramid& pyr, const CorrNormCache& norm_cache,
                            const QueryRecord& query, const WeightsContainer& weights,
                            const TrackOptions& opts) {
    const GlobalCorr gc = global_correlation(pyr, query.point, &norm_cache);
    auto [track, occl] = init_track(gc, weights, opts.tau);

    IterateResult result;
    result.track = std::move(track);
    result.occl = std::move(occl);
    if (opts.iterations > 0 && opts.refiner == RefinerMode::Learned) {
        RefinerConfig cfg = RefinerConfig::for_variant(opts.variant);
        cfg.iterations = opts.iterations;
        result = iterate(result.track, result.occl, pyr, query.point, weights, cfg);
    } else if (opts.iterations > 0 && opts.refiner == RefinerMode::Argmax) {
        result = iterate_argmax(result.track, result.occl, pyr, query.point, opts.iterations,
                                opts.tau, kSoftargmaxSigma);
    }

    TrackRecord rec;
    rec.query = query;
    rec.track = std::move(result.track);
    rec.occl_prob.resize(static_cast<size_t>(result.occl.length()));
    for (int f = 0; f < result.occl.length(); ++f) rec.occl_prob[static_cast<size_t>(f)] = result.occl.probability(f);
    if (opts.keep_history) rec.history = std::move(result.history);
    return rec;
}

}  // namespace

TrackFile run_track(const Video& video, const std::vector<QueryRecord>& queries,
                    const WeightsContainer& weights, const TrackOptions& opts) {
    video.validate();
    for (const auto& q : queries) {
        if (q.point.t < 0 || q.point.t >= video.t())
            throw std::invalid_argument("query frame " + std::to_string(q.point.t) +
                                        " outside video of length " + std::to_string(video.t()));
        if (q.point.x < 0 || q.point.x > video.width() - 1 || q.point.y < 0 ||
            q.point.y > video.height() - 1)
            throw std::invalid_argument("query point outside frame bounds");
    }
    if (opts.backbone == BackboneMode::Learned) validate_weights(weights, opts.variant);

    const FeaturePyramid pyr = opts.backbone == BackboneMode::PatchIdentity
                                   ? patch_identity_pyramid(video)
                                   : extract_pyramid(video, weights);
    const CorrNormCache norm_cache = build_corr_norm_cache(pyr);

    TrackFile tf;
    tf.width = video.width();
    tf.height = video.height();
    tf.tracks.resize(queries.size());

    const int workers = std::min<int>(resolve_workers(opts.workers), static_cast<int>(queries.size()));
    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    std::string error_message;
    std::mutex error_mutex;

    auto worker = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= queries.size() || failed.load()) return;
            try {
                tf.tracks[i] = track_one_query(pyr, norm_cache, queries[i], weights, opts);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                error_message = e.what();
                failed.store(true);
                return;
            }
        }
    };

    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int i = 0; i < workers; ++i) threads.emplace_back(worker);
        for (auto& th : threads) th.join();
    }
    if (failed.load()) throw std::runtime_error("run_track: " + error_message);
    return tf;
}

MetricsReport run_eval(const TrackFile& pred, const GroundTruthFile& gt, QueryMode mode) {
    // Re-derive the query set from the ground truth and match predictions by
    // track index and query point.
    std::vector<Track> preds;
    std::vector<OcclusionTrack> occls;
    std::vector<GroundTruthTrack> gts;

    size_t cursor = 0;
    for (size_t i = 0; i < gt.tracks.size(); ++i) {
        const auto queries = sample_queries(gt.tracks[i], mode);
        for (const auto& q : queries) {
            const TrackRecord* match = nullptr;
            // Prefer explicit track_index matches; fall back to positional order.
            for (const auto& rec : pred.tracks)
                if (rec.query.track_index == static_cast<int>(i) && rec.query.point.t == q.t &&
                    std::abs(rec.query.point.x - q.x) < 1e-6 && std::abs(rec.query.point.y - q.y) < 1e-6) {
                    match = &rec;
                    break;
                }
            if (!match) {
                if (cursor >= pred.tracks.size())
                    throw std::runtime_error("eval: no prediction for ground-truth track " +
                                             std::to_string(i) + " query frame " + std::to_string(q.t));
                match = &pred.tracks[cursor];
            }
            ++cursor;
            if (match->track.length() != gt.tracks[i].length())
                throw std::runtime_error("eval: prediction length does not match ground truth");
            preds.push_back(rescale_track(match->track, pred.width, pred.height));
            OcclusionTrack oc;
            oc.logits.reserve(match->occl_prob.size());
            for (const double p : match->occl_prob) {
                const double clamped = std::clamp(p, 1e-9, 1.0 - 1e-9);
                oc.logits.push_back(std::log(clamped / (1.0 - clamped)));
            }
            occls.push_back(std::move(oc));
            gts.push_back(rescale_gt(gt.tracks[i], gt.width, gt.height));
        }
    }
    return aggregate_metrics(preds, occls, gts);
}

uint64_t analytic_corr_macs_per_point(int t, int iterations, const std::vector<int>& channel_widths,
                                      int radius) {
    const uint64_t n = static_cast<uint64_t>(2 * radius + 1) * (2 * radius + 1);
    uint64_t macs = 0;
    for (const int c : channel_widths)
        macs += (n * n + 2 * n) * static_cast<uint64_t>(c);  // all pairs + both norms
    return macs * static_cast<uint64_t>(t) * static_cast<uint64_t>(iterations);
}

double analytic_refinement_gflops_per_point(Variant v, int t, int iterations,
                                            const std::vector<int>& channel_widths, int radius) {
    // Local correlation.
    double macs = static_cast<double>(analytic_corr_macs_per_point(t, iterations, channel_widths, radius));

    // Correlation encoder: both branches, all levels, every frame and iteration.
    const auto blocks = encoder_blocks(v);
    double enc_macs = 0.0;
    int side = 2 * radius + 1, cin = side * side;
    for (const auto& b : blocks) {
        side = (side + b.stride - 1) / b.stride;
        enc_macs += static_cast<double>(side) * side * b.kernel * b.kernel * cin * b.channels;
        cin = b.channels;
    }
    macs += enc_macs * 2 * static_cast<double>(channel_widths.size()) * t * iterations;

    // Transformer: token projection, attention, MLP per layer.
    const RefinerConfig cfg = RefinerConfig::for_variant(v);
    const int h = cfg.hidden;
    const int token = 2 * 2 * nn::kSinusoidChannels + 1 + corr_embedding_width(v);
    double tr_macs = static_cast<double>(token) * h * t;
    const double attn = 4.0 * h * h * t + 2.0 * static_cast<double>(t) * t * h;
    const double mlp = 2.0 * h * (h * cfg.mlp_ratio) * t;
    tr_macs += (attn + mlp) * cfg.n_layers;
    tr_macs += static_cast<double>(h) * 3 * t;  // output head
    macs += tr_macs * iterations;

    return 2.0 * macs / 1e9;  // multiply + add
}

BenchReport run_bench(Variant variant, int t, int h, int w, const std::vector<int>& n_points_list,
                      uint64_t seed, int workers) {
    SynthSpec spec;
    spec.seed = seed;
    spec.t = t;
    spec.h = h;
    spec.w = w;
    spec.motion = Motion::Translate;
    spec.speed = 1.0;
    spec.n_queries = 1;
    for (const int n : n_points_list) spec.n_queries = std::max(spec.n_queries, n);
    const SynthResult synth = synth_generate(spec);
    const WeightsContainer weights = init_weights(variant, seed);

    std::vector<int> channels;
    for (const auto& entry : {0, 1, 2})
        channels.push_back(weights.get("backbone.block" + std::to_string(entry) + ".conv.kernel").shape[3]);

    TrackOptions opts;
    opts.variant = variant;
    opts.refiner = RefinerMode::Learned;
    opts.backbone = BackboneMode::Learned;
    opts.keep_history = false;
    opts.workers = workers;

    BenchReport rep;
    rep.variant = variant;
    rep.t = t;
    rep.h = h;
    rep.w = w;

    for (const int n : n_points_list) {
        std::vector<QueryRecord> queries;
        for (int i = 0; i < n; ++i) {
            QueryRecord q;
            q.point.x = synth.tracks[static_cast<size_t>(i)].positions[0].first;
            q.point.y = synth.tracks[static_cast<size_t>(i)].positions[0].second;
            q.point.t = 0;
            q.track_index = i;
            queries.push_back(q);
        }
        nn::reset_corr_mac_counter();
        const auto start = std::chrono::steady_clock::now();
        run_track(synth.video, queries, weights, opts);
        const auto stop = std::chrono::steady_clock::now();

        BenchEntry e;
        e.n_points = n;
        e.seconds = std::chrono::duration<double>(stop - start).count();
        e.points_per_second = n / e.seconds;
        e.measured_corr_macs = nn::corr_mac_count();
        e.analytic_corr_macs =
            static_cast<uint64_t>(n) *
            analytic_corr_macs_per_point(t, opts.iterations, channels, kCorrRadius);
        e.gflops_per_point =
            analytic_refinement_gflops_per_point(variant, t, opts.iterations, channels, kCorrRadius);
        rep.entries.push_back(e);
    }
    return rep;
}

std::string serialize_bench_report(const BenchReport& rep) {
    nlohmann::ordered_json j;
    j["variant"] = variant_name(rep.variant);
    j["frames"] = rep.t;
    j["resolution"] = {rep.w, rep.h};
    j["entries"] = nlohmann::ordered_json::array();
    for (const auto& e : rep.entries) {
        j["entries"].push_back({{"n_points", e.n_points},
                                {"seconds", e.seconds},
                                {"points_per_second", e.points_per_second},
                                {"measured_corr_macs", e.measured_corr_macs},
                                {"analytic_corr_macs", e.analytic_corr_macs},
                                {"analytic_gflops_per_point", e.gflops_per_point}});
    }
    return j.dump(2) + "\n";
}

void render_overlays(const Video& video, const TrackFile& tf, const std::string& dir) {
    const int h = video.height(), w = video.width();
    for (int f = 0; f < video.t(); ++f) {
        Tensor frame = video.frame(f);
        for (size_t q = 0; q < tf.tracks.size(); ++q) {
            const auto& rec = tf.tracks[q];
            if (f >= rec.track.length()) continue;
            const auto& pos = rec.track.positions[static_cast<size_t>(f)];
            const bool visible = rec.occl_prob[static_cast<size_t>(f)] > 0.5;
            const int cx = static_cast<int>(std::lround(pos.first));
            const int cy = static_cast<int>(std::lround(pos.second));
            const float r = static_cast<float>((q * 61 % 255) / 255.0);
            const float g = static_cast<float>((q * 127 % 255) / 255.0);
            for (int dy = -2; dy <= 2; ++dy)
                for (int dx = -2; dx <= 2; ++dx) {
                    const int x = cx + dx, y = cy + dy;
                    if (x < 0 || x >= w || y < 0 || y >= h) continue;
                    if (std::abs(dx) + std::abs(dy) > 2) continue;
                    frame(y, x, 0) = visible ? r : 1.0f;
                    frame(y, x, 1) = visible ? g : 0.0f;
                    frame(y, x, 2) = visible ? 1.0f : 0.0f;
                }
        }
        char name[32];
        std::snprintf(name, sizeof(name), "overlay_%05d.png", f);
        save_png(frame, dir + "/" + name);
    }
}

}  // namespace locotrack

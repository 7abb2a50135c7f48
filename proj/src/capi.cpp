#include "locotrack.h"

#include <cstring>
#include <exception>
#include <string>

#include <json.hpp>

#include "locotrack/io.hpp"
#include "locotrack/pipeline.hpp"
#include "locotrack/selftest.hpp"
#include "locotrack/synth.hpp"
#include "locotrack/weights.hpp"

using namespace locotrack;

struct lt_model {
    WeightsContainer weights;
    Variant variant;
};

struct lt_video {
    Video video;
};

namespace {

thread_local std::string g_last_error;

lt_status fail(lt_status code, const std::string& msg) {
    g_last_error = msg;
    return code;
}

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

// Maps exception text onto the coarse status codes.
lt_status classify(const std::exception& e) {
    const std::string msg = e.what();
    if (msg.find("cannot open") != std::string::npos || msg.find("no PNG") != std::string::npos)
        return fail(LT_ERR_IO, msg);
    if (msg.find("magic") != std::string::npos || msg.find("truncated") != std::string::npos ||
        msg.find("schema") != std::string::npos || msg.find("duplicate") != std::string::npos ||
        msg.find("parse") != std::string::npos)
        return fail(LT_ERR_FORMAT, msg);
    if (msg.find("shape") != std::string::npos || msg.find("length") != std::string::npos ||
        msg.find("extent") != std::string::npos || msg.find("mismatch") != std::string::npos ||
        msg.find("missing parameter") != std::string::npos)
        return fail(LT_ERR_SHAPE, msg);
    return fail(LT_ERR_ARG, msg);
}

template <typename Fn>
lt_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const nlohmann::json::exception& e) {
        return fail(LT_ERR_FORMAT, e.what());
    } catch (const std::exception& e) {
        return classify(e);
    } catch (...) {
        return fail(LT_ERR_INTERNAL, "unknown error");
    }
}

}  // namespace

extern "C" {

const char* lt_last_error(void) { return g_last_error.c_str(); }

void lt_string_free(char* s) { delete[] s; }

lt_status lt_model_create(const char* variant, uint64_t seed, lt_model** out) {
    if (!variant || !out) return fail(LT_ERR_ARG, "null argument");
    return guarded([&] {
        const Variant v = parse_variant(variant);
        *out = new lt_model{init_weights(v, seed), v};
        return LT_OK;
    });
}

lt_status lt_model_load(const char* weights_path, const char* variant, lt_model** out) {
    if (!weights_path || !variant || !out) return fail(LT_ERR_ARG, "null argument");
    return guarded([&] {
        const Variant v = parse_variant(variant);
        WeightsContainer w = load_weights(weights_path);
        validate_weights(w, v);
        *out = new lt_model{std::move(w), v};
        return LT_OK;
    });
}

lt_status lt_model_save(const lt_model* model, const char* path) {
    if (!model || !path) return fail(LT_ERR_ARG, "null argument");
    return guarded([&] {
        save_weights(model->weights, path);
        return LT_OK;
    });
}

int64_t lt_model_parameter_count(const lt_model* model) {
    return model ? model->weights.parameter_count() : 0;
}

void lt_model_destroy(lt_model* model) { delete model; }

lt_status lt_video_load(const char* path, lt_video** out) {
    if (!path || !out) return fail(LT_ERR_ARG, "null argument");
    return guarded([&] {
        *out = new lt_video{load_video(path)};
        return LT_OK;
    });
}

lt_status lt_video_save_tensor(const lt_video* video, const char* path) {
    if (!video || !path) return fail(LT_ERR_ARG, "null argument");
    return guarded([&] {
        save_video_tensor(video->video, path);
        return LT_OK;
    });
}

lt_status lt_video_save_pngs(const lt_video* video, const char* dir) {
    if (!video || !dir) return fail(LT_ERR_ARG, "null argument");
    return guarded([&] {
        save_video_pngs(video->video, dir);
        return LT_OK;
    });
}

void lt_video_destroy(lt_video* video) { delete video; }

int lt_video_frames(const lt_video* video) { return video ? video->video.t() : 0; }
int lt_video_width(const lt_video* video) { return video ? video->video.width() : 0; }
int lt_video_height(const lt_video* video) { return video ? video->video.height() : 0; }

lt_status lt_synth(const char* spec_json, const char* query_mode, lt_video** video_out,
                   char** gt_json_out, char** queries_json_out) {
    if (!spec_json || !video_out) return fail(LT_ERR_ARG, "null argument");
    return guarded([&] {
        const auto j = nlohmann::json::parse(spec_json);
        SynthSpec spec;
        spec.seed = j.value("seed", 0ULL);
        spec.t = j.value("t", 24);
        spec.h = j.value("h", 256);
        spec.w = j.value("w", 256);
        spec.motion = parse_motion(j.value("motion", "translate"));
        spec.speed = j.value("speed", 2.0);
        spec.n_queries = j.value("n_queries", 16);
        SynthResult res = synth_generate(spec);

        if (gt_json_out) {
            GroundTruthFile gt;
            gt.width = spec.w;
            gt.height = spec.h;
            gt.tracks = res.tracks;
            nlohmann::ordered_json gj;
            gj["width"] = gt.width;
            gj["height"] = gt.height;
            gj["tracks"] = nlohmann::ordered_json::array();
            for (const auto& t : gt.tracks) {
                nlohmann::ordered_json tj;
                tj["positions"] = nlohmann::ordered_json::array();
                for (const auto& p : t.positions) tj["positions"].push_back({p.first, p.second});
                tj["visible"] = nlohmann::ordered_json::array();
                for (const bool v : t.visible) tj["visible"].push_back(v);
                gj["tracks"].push_back(std::move(tj));
            }
            *gt_json_out = dup_string(gj.dump(2) + "\n");
        }
        if (queries_json_out) {
            const QueryMode mode = parse_query_mode(query_mode ? query_mode : "strided");
            nlohmann::ordered_json qj;
            qj["queries"] = nlohmann::ordered_json::array();
            for (size_t i = 0; i < res.tracks.size(); ++i)
                for (const auto& q : sample_queries(res.tracks[i], mode))
                    qj["queries"].push_back({{"x", q.x}, {"y", q.y}, {"t", q.t},
                                             {"track_index", static_cast<int>(i)}});
            *queries_json_out = dup_string(qj.dump(2) + "\n");
        }
        *video_out = new lt_video{std::move(res.video)};
        return LT_OK;
    });
}

void lt_track_options_init(lt_track_options* opts) {
    if (!opts) return;
    opts->refiner = "learned";
    opts->iterations = 4;
    opts->tau = 20.0;
    opts->use_patch_identity_backbone = 0;
    opts->keep_history = 1;
    opts->workers = 0;
}

lt_status lt_track_run(const lt_model* model, const lt_video* video, const char* queries_json,
                       const lt_track_options* opts, char** trackfile_json_out) {
    if (!model || !video || !queries_json || !trackfile_json_out)
        return fail(LT_ERR_ARG, "null argument");
    return guarded([&] {
        std::vector<QueryRecord> queries;
        const auto j = nlohmann::json::parse(queries_json);
        for (const auto& e : j.at("queries")) {
            QueryRecord q;
            q.point.x = e.at("x").get<double>();
            q.point.y = e.at("y").get<double>();
            q.point.t = e.at("t").get<int>();
            q.track_index = e.value("track_index", -1);
            queries.push_back(q);
        }

        TrackOptions topts;
        topts.variant = model->variant;
        if (opts) {
            topts.refiner = parse_refiner_mode(opts->refiner ? opts->refiner : "learned");
            topts.iterations = opts->iterations;
            topts.tau = opts->tau;
            topts.backbone = opts->use_patch_identity_backbone ? BackboneMode::PatchIdentity
                                                               : BackboneMode::Learned;
            topts.keep_history = opts->keep_history != 0;
            topts.workers = opts->workers;
        }
        const TrackFile tf = run_track(video->video, queries, model->weights, topts);
        *trackfile_json_out = dup_string(serialize_track_file(tf));
        return LT_OK;
    });
}

lt_status lt_eval_run(const char* trackfile_json, const char* gt_json, const char* mode,
                      char** report_json_out) {
    if (!trackfile_json || !gt_json || !report_json_out) return fail(LT_ERR_ARG, "null argument");
    return guarded([&] {
        const TrackFile pred = parse_track_file(trackfile_json);
        const auto gj = nlohmann::json::parse(gt_json);
        GroundTruthFile gt;
        gt.width = gj.at("width").get<int>();
        gt.height = gj.at("height").get<int>();
        for (const auto& tj : gj.at("tracks")) {
            GroundTruthTrack t;
            for (const auto& p : tj.at("positions"))
                t.positions.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
            for (const auto& v : tj.at("visible")) t.visible.push_back(v.get<bool>());
            gt.tracks.push_back(std::move(t));
        }
        const MetricsReport rep = run_eval(pred, gt, parse_query_mode(mode ? mode : "strided"));
        *report_json_out = dup_string(serialize_metrics_report(rep));
        return LT_OK;
    });
}

lt_status lt_bench_run(const char* variant, int frames, int height, int width,
                       const int* n_points, size_t n_points_len, uint64_t seed, int workers,
                       char** report_json_out) {
    if (!variant || !n_points || n_points_len == 0 || !report_json_out)
        return fail(LT_ERR_ARG, "null argument");
    return guarded([&] {
        const std::vector<int> pts(n_points, n_points + n_points_len);
        const BenchReport rep = run_bench(parse_variant(variant), frames, height, width, pts, seed, workers);
        *report_json_out = dup_string(serialize_bench_report(rep));
        return LT_OK;
    });
}

lt_status lt_selftest(char** report_out) {
    return guarded([&] {
        std::string report;
        const bool ok = run_selftest(report);
        if (report_out) *report_out = dup_string(report);
        if (!ok) return fail(LT_ERR_INTERNAL, "selftest failed:\n" + report);
        return LT_OK;
    });
}

lt_status lt_render_overlays(const lt_video* video, const char* trackfile_json, const char* dir) {
    if (!video || !trackfile_json || !dir) return fail(LT_ERR_ARG, "null argument");
    return guarded([&] {
        const TrackFile tf = parse_track_file(trackfile_json);
        render_overlays(video->video, tf, dir);
        return LT_OK;
    });
}

}  // extern "C"

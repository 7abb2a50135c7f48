#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <string>

#include "locotrack/backbone.hpp"
#include "locotrack/io.hpp"
#include "locotrack/pipeline.hpp"
#include "locotrack/rng.hpp"
#include "locotrack/synth.hpp"
#include "locotrack/weights.hpp"

using namespace locotrack;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("locotrack_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("weights: LTW1 save/load round-trips bit-identically") {
    TempDir dir;
    WeightsContainer w;
    Rng rng(41);
    Tensor a({3, 5});
    for (auto& v : a.data) v = static_cast<float>(rng.next_uniform(-2.0, 2.0));
    Tensor b({2, 2, 4, 7});
    for (auto& v : b.data) v = static_cast<float>(rng.next_uniform(-2.0, 2.0));
    w.put("alpha", a);
    w.put("beta", b);

    const std::string p1 = dir.file("w1.ltw");
    save_weights(w, p1);
    const WeightsContainer w2 = load_weights(p1);
    CHECK(w2.size() == 2);
    CHECK(w2.get("alpha").shape == a.shape);
    CHECK(w2.get("beta").data == b.data);

    const std::string p2 = dir.file("w2.ltw");
    save_weights(w2, p2);
    CHECK(read_bytes(p1) == read_bytes(p2));
}

TEST_CASE("weights: corrupted containers are rejected with distinct messages") {
    TempDir dir;
    WeightsContainer w;
    w.put("only", Tensor({4}));
    const std::string good = dir.file("good.ltw");
    save_weights(w, good);
    const std::string bytes = read_bytes(good);

    SUBCASE("bad magic") {
        std::string bad = bytes;
        bad[0] = 'X';
        write_text_file(dir.file("bad.ltw"), bad);
        CHECK_THROWS_AS(load_weights(dir.file("bad.ltw")), std::runtime_error);
    }
    SUBCASE("truncated payload") {
        write_text_file(dir.file("trunc.ltw"), bytes.substr(0, bytes.size() - 6));
        CHECK_THROWS_AS(load_weights(dir.file("trunc.ltw")), std::runtime_error);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_weights(dir.file("absent.ltw")), std::runtime_error);
    }
}

TEST_CASE("weights: duplicate names are rejected at insertion") {
    WeightsContainer w;
    w.put("x", Tensor({2}));
    CHECK_THROWS_AS(w.put("x", Tensor({2})), std::invalid_argument);
}

TEST_CASE("weights: manifest pins the refiner hidden widths per variant") {
    for (const auto& e : weights_manifest(Variant::Base))
        if (e.name == "refiner.out_head.weight") CHECK(e.shape == std::vector<int>{384, 3});
    for (const auto& e : weights_manifest(Variant::Small))
        if (e.name == "refiner.out_head.weight") CHECK(e.shape == std::vector<int>{256, 3});
}

TEST_CASE("weights: validate_weights names the first missing key") {
    WeightsContainer w;  // empty
    try {
        validate_weights(w, Variant::Small);
        FAIL("expected a validation error");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("backbone.block0.conv.kernel") != std::string::npos);
    }
}

TEST_CASE("weights: seeded init is reproducible and ends with a zero output head") {
    const WeightsContainer a = init_weights(Variant::Small, 77);
    const WeightsContainer b = init_weights(Variant::Small, 77);
    const WeightsContainer c = init_weights(Variant::Small, 78);
    CHECK(a.size() == b.size());
    bool any_diff_from_c = false;
    for (const auto& name : a.names()) {
        CHECK(a.get(name).data == b.get(name).data);
        if (a.get(name).data != c.get(name).data) any_diff_from_c = true;
    }
    CHECK(any_diff_from_c);
    for (float v : a.get("refiner.out_head.weight").data) CHECK(v == 0.0f);
    for (float v : a.get("refiner.out_head.bias").data) CHECK(v == 0.0f);
}

TEST_CASE("weights: parameter_count matches the manifest shapes") {
    const WeightsContainer w = init_weights(Variant::Base, 1);
    int64_t expect = 0;
    for (const auto& e : weights_manifest(Variant::Base)) {
        int64_t n = 1;
        for (int d : e.shape) n *= d;
        expect += n;
    }
    CHECK(w.parameter_count() == expect);
}

TEST_CASE("synth: zero speed keeps every track stationary") {
    SynthSpec spec;
    spec.seed = 50;
    spec.t = 6;
    spec.h = 48;
    spec.w = 48;
    spec.speed = 0.0;
    spec.n_queries = 4;
    const SynthResult r = synth_generate(spec);
    for (const auto& gt : r.tracks)
        for (const auto& p : gt.positions) {
            CHECK(p.first == doctest::Approx(gt.positions[0].first));
            CHECK(p.second == doctest::Approx(gt.positions[0].second));
        }
}

TEST_CASE("synth: translate ground truth advances speed px per frame") {
    SynthSpec spec;
    spec.seed = 51;
    spec.t = 8;
    spec.h = 64;
    spec.w = 64;
    spec.speed = 2.0;
    spec.n_queries = 3;
    const SynthResult r = synth_generate(spec);
    CHECK(r.video.t() == 8);
    for (const auto& gt : r.tracks)
        for (size_t f = 1; f < gt.positions.size(); ++f) {
            CHECK(gt.positions[f].first - gt.positions[f - 1].first == doctest::Approx(2.0));
            CHECK(gt.positions[f].second == doctest::Approx(gt.positions[0].second));
        }
}

TEST_CASE("synth: occluder motion marks covered frames invisible") {
    SynthSpec spec;
    spec.seed = 52;
    spec.t = 16;
    spec.h = 64;
    spec.w = 64;
    spec.motion = Motion::Occluder;
    spec.speed = 1.0;
    spec.n_queries = 6;
    const SynthResult r = synth_generate(spec);
    bool any_occluded = false;
    for (const auto& gt : r.tracks) {
        CHECK(gt.visible.size() == gt.positions.size());
        for (bool v : gt.visible) any_occluded |= !v;
    }
    CHECK(any_occluded);
}

TEST_CASE("synth: invalid geometry is rejected") {
    SynthSpec spec;
    spec.h = 50;  // not divisible by 8
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec.h = 64;
    spec.w = 64;
    spec.speed = 10.0;
    spec.t = 24;  // 240 px of travel in a 64 px frame
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("track file: JSON serialization round-trips losslessly") {
    TrackFile tf;
    tf.width = 64;
    tf.height = 48;
    TrackRecord rec;
    rec.query.point = QueryPoint{3.25, 7.5, 2};
    rec.query.track_index = 1;
    rec.track.positions = {{1.0, 2.0}, {3.5, 4.25}};
    rec.occl_prob = {0.75, 0.25};
    Track h;
    h.positions = {{1.1, 2.1}, {3.4, 4.2}};
    rec.history.push_back(h);
    tf.tracks.push_back(rec);

    const std::string text = serialize_track_file(tf);
    const TrackFile back = parse_track_file(text);
    CHECK(back.width == 64);
    CHECK(back.schema_version == 1);
    REQUIRE(back.tracks.size() == 1);
    CHECK(back.tracks[0].query.point.t == 2);
    CHECK(back.tracks[0].track.positions == rec.track.positions);
    CHECK(back.tracks[0].occl_prob == rec.occl_prob);
    REQUIRE(back.tracks[0].history.size() == 1);
    CHECK(back.tracks[0].history[0].positions == h.positions);
    CHECK(serialize_track_file(back) == text);
}

TEST_CASE("track file: schema violations are rejected") {
    CHECK_THROWS_AS(parse_track_file("{\"schema_version\": 1}"), std::runtime_error);
    CHECK_THROWS_AS(parse_track_file("not json"), std::runtime_error);
    CHECK_THROWS_AS(parse_track_file("{\"schema_version\": 9, \"width\": 8, \"height\": 8, "
                                     "\"tracks\": []}"),
                    std::runtime_error);
}

TEST_CASE("video tensor container round-trips") {
    TempDir dir;
    SynthSpec spec;
    spec.seed = 53;
    spec.t = 3;
    spec.h = 16;
    spec.w = 16;
    spec.speed = 0.5;
    spec.n_queries = 1;
    const SynthResult r = synth_generate(spec);
    const std::string path = dir.file("vid.ltw");
    save_video_tensor(r.video, path);
    const Video back = load_video(path);
    CHECK(back.frames.shape == r.video.frames.shape);
    CHECK(back.frames.data == r.video.frames.data);
}

TEST_CASE("video png round-trip is lossless after 8-bit quantization") {
    TempDir dir;
    SynthSpec spec;
    spec.seed = 54;
    spec.t = 2;
    spec.h = 16;
    spec.w = 16;
    spec.speed = 0.5;
    spec.n_queries = 1;
    SynthResult r = synth_generate(spec);
    // Pre-quantize to the 8-bit lattice so PNG encoding is exact.
    for (auto& v : r.video.frames.data) v = std::round(v * 255.0f) / 255.0f;
    save_video_pngs(r.video, dir.file("frames"));
    const Video back = load_video(dir.file("frames"));
    REQUIRE(back.frames.shape == r.video.frames.shape);
    for (size_t i = 0; i < back.frames.data.size(); ++i)
        CHECK(back.frames.data[i] == doctest::Approx(r.video.frames.data[i]).epsilon(1e-6));
}

TEST_CASE("run_track: byte-identical output across repeated runs") {
    SynthSpec spec;
    spec.seed = 55;
    spec.t = 5;
    spec.h = 32;
    spec.w = 32;
    spec.speed = 1.0;
    spec.n_queries = 3;
    const SynthResult r = synth_generate(spec);
    std::vector<QueryRecord> queries;
    for (size_t i = 0; i < r.tracks.size(); ++i) {
        QueryRecord q;
        q.point = QueryPoint{r.tracks[i].positions[0].first, r.tracks[i].positions[0].second, 0};
        q.track_index = static_cast<int>(i);
        queries.push_back(q);
    }
    const WeightsContainer w = init_weights(Variant::Small, 56);
    TrackOptions opts;
    opts.variant = Variant::Small;
    opts.iterations = 2;
    opts.workers = 2;
    const std::string a = serialize_track_file(run_track(r.video, queries, w, opts));
    const std::string b = serialize_track_file(run_track(r.video, queries, w, opts));
    CHECK(a == b);
}

TEST_CASE("run_track: iterations = 0 matches the refiner-free mode") {
    SynthSpec spec;
    spec.seed = 57;
    spec.t = 4;
    spec.h = 32;
    spec.w = 32;
    spec.speed = 1.0;
    spec.n_queries = 2;
    const SynthResult r = synth_generate(spec);
    std::vector<QueryRecord> queries;
    for (const auto& gt : r.tracks) {
        QueryRecord q;
        q.point = QueryPoint{gt.positions[0].first, gt.positions[0].second, 0};
        queries.push_back(q);
    }
    const WeightsContainer w = init_weights(Variant::Small, 58);
    TrackOptions zero_iters;
    zero_iters.variant = Variant::Small;
    zero_iters.iterations = 0;
    TrackOptions no_refiner;
    no_refiner.variant = Variant::Small;
    no_refiner.refiner = RefinerMode::None;
    const TrackFile a = run_track(r.video, queries, w, zero_iters);
    const TrackFile b = run_track(r.video, queries, w, no_refiner);
    REQUIRE(a.tracks.size() == b.tracks.size());
    for (size_t i = 0; i < a.tracks.size(); ++i)
        CHECK(a.tracks[i].track.positions == b.tracks[i].track.positions);
}

TEST_CASE("run_track: out-of-bounds queries are rejected, inputs untouched") {
    SynthSpec spec;
    spec.seed = 59;
    spec.t = 3;
    spec.h = 32;
    spec.w = 32;
    spec.speed = 0.5;
    spec.n_queries = 1;
    const SynthResult r = synth_generate(spec);
    const Tensor before = r.video.frames;
    QueryRecord q;
    q.point = QueryPoint{100.0, 5.0, 0};
    const WeightsContainer w = init_weights(Variant::Small, 60);
    TrackOptions opts;
    opts.variant = Variant::Small;
    CHECK_THROWS_AS(run_track(r.video, {q}, w, opts), std::invalid_argument);
    CHECK(r.video.frames.data == before.data);
}

TEST_CASE("run_eval: perfect predictions score 1.0 on every metric") {
    SynthSpec spec;
    spec.seed = 61;
    spec.t = 10;
    spec.h = 64;
    spec.w = 64;
    spec.speed = 1.0;
    spec.n_queries = 4;
    const SynthResult r = synth_generate(spec);
    GroundTruthFile gtf;
    gtf.width = spec.w;
    gtf.height = spec.h;
    gtf.tracks = r.tracks;

    TrackFile pred;
    pred.width = spec.w;
    pred.height = spec.h;
    for (size_t i = 0; i < r.tracks.size(); ++i) {
        const auto qs = sample_queries(r.tracks[i], QueryMode::Strided);
        for (const auto& qp : qs) {
            TrackRecord rec;
            rec.query.point = qp;
            rec.query.track_index = static_cast<int>(i);
            rec.track.positions = r.tracks[i].positions;
            for (bool v : r.tracks[i].visible) rec.occl_prob.push_back(v ? 1.0 : 0.0);
            pred.tracks.push_back(rec);
        }
    }
    const MetricsReport rep = run_eval(pred, gtf, QueryMode::Strided);
    CHECK(rep.aj == doctest::Approx(1.0));
    CHECK(rep.pck_avg == doctest::Approx(1.0));
    CHECK(rep.oa == doctest::Approx(1.0));
    CHECK(rep.n_points == static_cast<int>(pred.tracks.size()));
}

TEST_CASE("run_eval: hand-built four-frame case reproduces AJ = 0.55") {
    GroundTruthFile gtf;
    gtf.width = 256;
    gtf.height = 256;
    GroundTruthTrack gt;
    for (int f = 0; f < 4; ++f) {
        gt.positions.emplace_back(100.0, 100.0);
        gt.visible.push_back(true);
    }
    gtf.tracks.push_back(gt);

    TrackFile pred;
    pred.width = 256;
    pred.height = 256;
    TrackRecord rec;
    rec.query.point = QueryPoint{100.0, 100.0, 0};
    rec.query.track_index = 0;
    const double errs[4] = {0.5, 3.0, 3.0, 20.0};
    for (int f = 0; f < 4; ++f) {
        rec.track.positions.emplace_back(100.0 + errs[f], 100.0);
        rec.occl_prob.push_back(0.99);
    }
    pred.tracks.push_back(rec);

    const MetricsReport rep = run_eval(pred, gtf, QueryMode::First);
    CHECK(rep.aj == doctest::Approx(0.55));
}

TEST_CASE("bench: analytic MAC formula matches a direct enumeration") {
    const std::vector<int> widths = {64, 128, 256};
    const int n = (2 * kCorrRadius + 1) * (2 * kCorrRadius + 1);
    uint64_t expect = 0;
    for (int c : widths)
        expect += static_cast<uint64_t>(n) * n * c + 2ull * n * c;
    expect *= 6ull * 4ull;  // t * iterations
    CHECK(analytic_corr_macs_per_point(6, 4, widths, kCorrRadius) == expect);
}

TEST_CASE("bench: a small run reports counters within 5% of the analytic model") {
    const BenchReport rep = run_bench(Variant::Small, 4, 32, 32, {1, 2}, 62, 1);
    REQUIRE(rep.entries.size() == 2);
    for (const auto& e : rep.entries) {
        CHECK(e.seconds > 0.0);
        CHECK(e.points_per_second > 0.0);
        const double rel = std::abs(static_cast<double>(e.measured_corr_macs) -
                                    static_cast<double>(e.analytic_corr_macs)) /
                           static_cast<double>(e.analytic_corr_macs);
        CHECK(rel <= 0.05);
    }
    const std::string json = serialize_bench_report(rep);
    CHECK(json.find("points_per_second") != std::string::npos);
}

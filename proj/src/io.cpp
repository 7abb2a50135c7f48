#include "locotrack/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "locotrack/weights.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace locotrack {

Tensor load_png(const std::string& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw std::runtime_error("png: cannot read '" + path + "': " + image.message);
    image.format = PNG_FORMAT_RGB;
    std::vector<uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&image);
        throw std::runtime_error("png: decode of '" + path + "' failed: " + image.message);
    }
    Tensor out({static_cast<int>(image.height), static_cast<int>(image.width), 3});
    for (size_t i = 0; i < buffer.size(); ++i) out.data[i] = buffer[i] / 255.0f;
    return out;
}

void save_png(const Tensor& image, const std::string& path) {
    if (image.ndim() != 3 || image.shape[2] != 3)
        throw std::invalid_argument("png: image must be H x W x 3");
    png_image out{};
    out.version = PNG_IMAGE_VERSION;
    out.format = PNG_FORMAT_RGB;
    out.width = static_cast<png_uint_32>(image.shape[1]);
    out.height = static_cast<png_uint_32>(image.shape[0]);
    std::vector<uint8_t> buffer(image.data.size());
    for (size_t i = 0; i < buffer.size(); ++i)
        buffer[i] = static_cast<uint8_t>(std::lround(std::clamp(image.data[i], 0.0f, 1.0f) * 255.0f));
    if (!png_image_write_to_file(&out, path.c_str(), 0, buffer.data(), 0, nullptr))
        throw std::runtime_error("png: write of '" + path + "' failed: " + std::string(out.message));
}

Video load_video(const std::string& path) {
    Video video;
    if (fs::is_directory(path)) {
        std::vector<std::string> files;
        for (const auto& e : fs::directory_iterator(path))
            if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path().string());
        if (files.empty()) throw std::runtime_error("video: no PNG frames in '" + path + "'");
        std::sort(files.begin(), files.end());
        const Tensor first = load_png(files[0]);
        const int h = first.shape[0], w = first.shape[1];
        video.frames = Tensor({static_cast<int>(files.size()), h, w, 3});
        for (size_t f = 0; f < files.size(); ++f) {
            const Tensor frame = f == 0 ? first : load_png(files[f]);
            if (frame.shape[0] != h || frame.shape[1] != w)
                throw std::runtime_error("video: frame '" + files[f] + "' has mismatched size");
            std::copy(frame.data.begin(), frame.data.end(),
                      video.frames.data.begin() + static_cast<int64_t>(f) * frame.numel());
        }
    } else {
        const WeightsContainer c = load_weights(path);
        if (!c.contains("video"))
            throw std::runtime_error("video: container '" + path + "' has no 'video' entry");
        video.frames = c.get("video");
        if (video.frames.ndim() != 4 || video.frames.shape[3] != 3)
            throw std::runtime_error("video: entry must be T x H x W x 3, got " +
                                     video.frames.shape_str());
    }
    video.validate();
    return video;
}

void save_video_tensor(const Video& video, const std::string& path) {
    WeightsContainer c;
    c.put("video", video.frames);
    save_weights(c, path);
}

void save_video_pngs(const Video& video, const std::string& dir) {
    fs::create_directories(dir);
    for (int f = 0; f < video.t(); ++f) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05d.png", f);
        save_png(video.frame(f), (fs::path(dir) / name).string());
    }
}

namespace {

json query_to_json(const QueryRecord& q) {
    json j{{"x", q.point.x}, {"y", q.point.y}, {"t", q.point.t}};
    if (q.track_index >= 0) j["track_index"] = q.track_index;
    return j;
}

QueryRecord query_from_json(const json& j) {
    QueryRecord q;
    q.point.x = j.at("x").get<double>();
    q.point.y = j.at("y").get<double>();
    q.point.t = j.at("t").get<int>();
    q.track_index = j.value("track_index", -1);
    return q;
}

}  // namespace

std::vector<QueryRecord> load_queries(const std::string& path) {
    const json j = json::parse(read_text_file(path));
    std::vector<QueryRecord> out;
    for (const auto& e : j.at("queries")) out.push_back(query_from_json(e));
    return out;
}

void save_queries(const std::vector<QueryRecord>& queries, const std::string& path) {
    json j;
    j["queries"] = json::array();
    for (const auto& q : queries) j["queries"].push_back(query_to_json(q));
    write_text_file(path, j.dump(2) + "\n");
}

GroundTruthFile load_ground_truth(const std::string& path) {
    const json j = json::parse(read_text_file(path));
    GroundTruthFile gt;
    gt.width = j.at("width").get<int>();
    gt.height = j.at("height").get<int>();
    for (const auto& tj : j.at("tracks")) {
        GroundTruthTrack t;
        for (const auto& p : tj.at("positions"))
            t.positions.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        for (const auto& v : tj.at("visible")) t.visible.push_back(v.get<bool>());
        if (t.positions.size() != t.visible.size())
            throw std::runtime_error("ground truth: positions/visible lengths disagree in '" + path + "'");
        gt.tracks.push_back(std::move(t));
    }
    return gt;
}

void save_ground_truth(const GroundTruthFile& gt, const std::string& path) {
    json j;
    j["width"] = gt.width;
    j["height"] = gt.height;
    j["tracks"] = json::array();
    for (const auto& t : gt.tracks) {
        json tj;
        tj["positions"] = json::array();
        for (const auto& p : t.positions) tj["positions"].push_back({p.first, p.second});
        tj["visible"] = json::array();
        for (const bool v : t.visible) tj["visible"].push_back(v);
        j["tracks"].push_back(std::move(tj));
    }
    write_text_file(path, j.dump(2) + "\n");
}

std::string serialize_track_file(const TrackFile& tf) {
    json j;
    j["schema_version"] = tf.schema_version;
    j["width"] = tf.width;
    j["height"] = tf.height;
    j["tracks"] = json::array();
    for (const auto& rec : tf.tracks) {
        json tj;
        tj["query"] = query_to_json(rec.query);
        tj["points"] = json::array();
        for (size_t f = 0; f < rec.track.positions.size(); ++f)
            tj["points"].push_back({{"x", rec.track.positions[f].first},
                                    {"y", rec.track.positions[f].second},
                                    {"occl_prob", rec.occl_prob[f]}});
        if (!rec.history.empty()) {
            tj["history"] = json::array();
            for (const auto& h : rec.history) {
                json hj = json::array();
                for (const auto& p : h.positions) hj.push_back({p.first, p.second});
                tj["history"].push_back(std::move(hj));
            }
        }
        j["tracks"].push_back(std::move(tj));
    }
    return j.dump(2) + "\n";
}

TrackFile parse_track_file(const std::string& json_text) {
    TrackFile tf;
    try {
        const json j = json::parse(json_text);
        tf.schema_version = j.at("schema_version").get<int>();
        if (tf.schema_version != 1)
            throw std::runtime_error("track file: unsupported schema version " +
                                     std::to_string(tf.schema_version));
        tf.width = j.at("width").get<int>();
        tf.height = j.at("height").get<int>();
        for (const auto& tj : j.at("tracks")) {
            TrackRecord rec;
            rec.query = query_from_json(tj.at("query"));
            for (const auto& p : tj.at("points")) {
                rec.track.positions.emplace_back(p.at("x").get<double>(), p.at("y").get<double>());
                rec.occl_prob.push_back(p.at("occl_prob").get<double>());
            }
            if (tj.contains("history"))
                for (const auto& hj : tj.at("history")) {
                    Track h;
                    for (const auto& p : hj)
                        h.positions.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
                    rec.history.push_back(std::move(h));
                }
            tf.tracks.push_back(std::move(rec));
        }
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("track file: ") + e.what());
    }
    return tf;
}

TrackFile load_track_file(const std::string& path) { return parse_track_file(read_text_file(path)); }

void save_track_file(const TrackFile& tf, const std::string& path) {
    write_text_file(path, serialize_track_file(tf));
}

std::string serialize_metrics_report(const MetricsReport& rep) {
    json j;
    j["aj"] = rep.aj;
    j["pck_avg"] = rep.pck_avg;
    j["pck_per_threshold"] = rep.pck_per_threshold;
    j["oa"] = rep.oa;
    j["n_points"] = rep.n_points;
    j["degenerate_flag"] = rep.degenerate_flag;
    return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    os << text;
    if (!os) throw std::runtime_error("write to '" + path + "' failed");
}

std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace locotrack

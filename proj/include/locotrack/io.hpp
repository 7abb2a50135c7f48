#pragma once

#include <string>
#include <vector>

#include "locotrack/metrics.hpp"
#include "locotrack/types.hpp"

namespace locotrack {

// Video input: a directory of PNG frames (lexicographically ordered) or a
// raw tensor container (LTW1 file with a single "video" entry, T x H x W x 3).
Video load_video(const std::string& path);
void save_video_tensor(const Video& video, const std::string& path);
void save_video_pngs(const Video& video, const std::string& dir);

Tensor load_png(const std::string& path);               // H x W x 3 in [0,1]
void save_png(const Tensor& image, const std::string& path);

// JSON files. Queries carry an optional ground-truth track index so
// evaluation can associate predictions with tracks.
struct QueryRecord {
    QueryPoint point;
    int track_index = -1;
};
std::vector<QueryRecord> load_queries(const std::string& path);
void save_queries(const std::vector<QueryRecord>& queries, const std::string& path);

struct GroundTruthFile {
    int width = 0, height = 0;
    std::vector<GroundTruthTrack> tracks;
};
GroundTruthFile load_ground_truth(const std::string& path);
void save_ground_truth(const GroundTruthFile& gt, const std::string& path);

struct TrackRecord {
    QueryRecord query;
    Track track;
    std::vector<double> occl_prob;
    std::vector<Track> history;  // optional per-iteration tracks
};

struct TrackFile {
    int schema_version = 1;
    int width = 0, height = 0;
    std::vector<TrackRecord> tracks;
};
std::string serialize_track_file(const TrackFile& tf);
TrackFile parse_track_file(const std::string& json_text);
TrackFile load_track_file(const std::string& path);
void save_track_file(const TrackFile& tf, const std::string& path);

std::string serialize_metrics_report(const MetricsReport& rep);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace locotrack

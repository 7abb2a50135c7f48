/* C API for the locotrack point-tracking library.
 *
 * All functions return lt_status; on failure lt_last_error() holds a
 * thread-local message. Objects are opaque handles released with the
 * matching *_destroy call. Strings returned through char** are owned by the
 * caller and must be freed with lt_string_free.
 */
#ifndef LOCOTRACK_H
#define LOCOTRACK_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lt_status {
    LT_OK = 0,
    LT_ERR_ARG = 1,      /* invalid argument or option */
    LT_ERR_IO = 2,       /* file missing or unreadable/unwritable */
    LT_ERR_FORMAT = 3,   /* bad magic, truncation, schema violation */
    LT_ERR_SHAPE = 4,    /* tensor/track dimension mismatch */
    LT_ERR_INTERNAL = 5
} lt_status;

typedef struct lt_model lt_model;
typedef struct lt_video lt_video;

const char* lt_last_error(void);
void lt_string_free(char* s);

/* Model: variant is "S" or "B". lt_model_create seeds random weights
 * (refiner output head zeroed); lt_model_load reads an LTW1 container and
 * validates it against the variant manifest. */
lt_status lt_model_create(const char* variant, uint64_t seed, lt_model** out);
lt_status lt_model_load(const char* weights_path, const char* variant, lt_model** out);
lt_status lt_model_save(const lt_model* model, const char* path);
int64_t lt_model_parameter_count(const lt_model* model);
void lt_model_destroy(lt_model* model);

/* Video: `path` is a directory of PNG frames or an LTW1 tensor file with a
 * "video" entry. */
lt_status lt_video_load(const char* path, lt_video** out);
lt_status lt_video_save_tensor(const lt_video* video, const char* path);
lt_status lt_video_save_pngs(const lt_video* video, const char* dir);
void lt_video_destroy(lt_video* video);
int lt_video_frames(const lt_video* video);
int lt_video_width(const lt_video* video);
int lt_video_height(const lt_video* video);

/* Synthetic benchmark clip. spec_json: {"seed","t","h","w","motion",
 * "speed","n_queries"}; gt and queries (query-mode "strided"/"first") are
 * returned as JSON strings. */
lt_status lt_synth(const char* spec_json, const char* query_mode, lt_video** video_out,
                   char** gt_json_out, char** queries_json_out);

typedef struct lt_track_options {
    const char* refiner;   /* "learned" | "argmax" | "none" */
    int iterations;        /* K; 0 keeps the Stage I track */
    double tau;            /* softargmax temperature */
    int use_patch_identity_backbone;
    int keep_history;
    int workers;           /* 0: LOCOTRACK_WORKERS env var, else all cores */
} lt_track_options;

void lt_track_options_init(lt_track_options* opts);

/* Runs the two-stage pipeline for every query in queries_json and returns the
 * track file as JSON. */
lt_status lt_track_run(const lt_model* model, const lt_video* video, const char* queries_json,
                       const lt_track_options* opts, char** trackfile_json_out);

/* TAP-Vid metrics from track-file and ground-truth JSON. mode is "strided" or
 * "first". */
lt_status lt_eval_run(const char* trackfile_json, const char* gt_json, const char* mode,
                      char** report_json_out);

/* Throughput / FLOP benchmark. n_points is an array of point counts. */
lt_status lt_bench_run(const char* variant, int frames, int height, int width,
                       const int* n_points, size_t n_points_len, uint64_t seed, int workers,
                       char** report_json_out);

/* Runs the built-in oracle checks (correlation oracle, shape contracts,
 * softargmax, attention bias). Returns LT_OK when every check passes and a
 * one-line-per-check report either way. */
lt_status lt_selftest(char** report_out);

/* Renders per-frame track overlays as PNGs into dir. */
lt_status lt_render_overlays(const lt_video* video, const char* trackfile_json, const char* dir);

#ifdef __cplusplus
}
#endif

#endif /* LOCOTRACK_H */

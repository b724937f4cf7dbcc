/* difftransfer — paired timbre transfer with a conditional DDIM on log-mel
 * spectrograms. C API over the C++ core; every entry point returns a
 * dt_status, with a human-readable cause available from dt_last_error().
 */
#ifndef DIFFTRANSFER_H
#define DIFFTRANSFER_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define DT_API __declspec(dllexport)
#else
#define DT_API __attribute__((visibility("default")))
#endif

typedef enum dt_status {
    DT_OK = 0,
    DT_ERR_IO = 1,      /* unreadable or unwritable file */
    DT_ERR_FORMAT = 2,  /* undecodable/malformed content (audio, checkpoint) */
    DT_ERR_CONFIG = 3,  /* bad configuration key or value */
    DT_ERR_DATASET = 4, /* corpus layout problem (unpaired track, empty dir) */
    DT_ERR_NUMERIC = 5, /* numerical failure (NaN loss, eigensolver) */
    DT_ERR_INVALID = 6  /* precondition violated */
} dt_status;

/* Loaded checkpoint (weights + manifest). Opaque. */
typedef struct dt_checkpoint dt_checkpoint;

DT_API const char* dt_status_name(dt_status s);

/* Message for the most recent failure on this thread. Valid until the next
 * failing call on the same thread. */
DT_API const char* dt_last_error(void);

/* Frees strings returned through char** out parameters. */
DT_API void dt_string_free(char* s);

/* Resolves a run configuration. file_json and overrides_json are flat JSON
 * objects or NULL; precedence is overrides > file > defaults (with the
 * DIFFTRANSFER_SEED environment variable as the seed default). On success
 * *out_json holds the fully resolved configuration. */
DT_API dt_status dt_config_resolve(const char* file_json, const char* overrides_json,
                                   char** out_json);

/* Deterministic synthetic paired corpus: out_dir/timbreA, out_dir/timbreB,
 * manifest.json. voices=2 renders two-voice mixtures. */
DT_API dt_status dt_make_toy_dataset(const char* out_dir, unsigned long long seed, int n_tracks,
                                     double duration_s, int voices);

/* Per-epoch progress callback for dt_train. */
typedef void (*dt_epoch_cb)(int epoch, double mean_loss, double wall_s, void* user);

/* Trains on a two-subdirectory paired corpus and writes the checkpoint
 * (weights.bin, manifest.json, train_log.jsonl) to ckpt_dir. config_json is
 * a resolved configuration as produced by dt_config_resolve (NULL for
 * defaults). best_epoch/best_loss are optional outputs. */
DT_API dt_status dt_train(const char* data_dir, const char* ckpt_dir, const char* config_json,
                          dt_epoch_cb cb, void* user, int* best_epoch, double* best_loss);

DT_API dt_status dt_checkpoint_open(const char* ckpt_dir, dt_checkpoint** out);
DT_API void dt_checkpoint_close(dt_checkpoint* ckpt);

/* Manifest of an opened checkpoint as a JSON string. */
DT_API dt_status dt_checkpoint_manifest(const dt_checkpoint* ckpt, char** out_json);

/* Timbre transfer of a single wav. spec_out_path (optional) receives the
 * generated log-mel spectrogram in the binary .spec format. */
DT_API dt_status dt_transfer_file(dt_checkpoint* ckpt, const char* in_wav, const char* out_wav,
                                  const char* spec_out_path, int steps, unsigned long long seed);

/* Transfers every *.wav in in_dir to out_dir (same basenames, shared seed).
 * Individual file failures are skipped; their count lands in *out_n_failed
 * and the call reports DT_ERR_INVALID if any failed. */
DT_API dt_status dt_transfer_dir(dt_checkpoint* ckpt, const char* in_dir, const char* out_dir,
                                 int steps, unsigned long long seed, int dump_spectrograms,
                                 int* out_n_failed);

/* Frechet Audio Distance over the built-in spectral-statistics embedding plus
 * per-track Jaccard pitch distance, matched by basename. Writes the JSON
 * report to report_path if non-NULL and/or returns it via out_report_json. */
DT_API dt_status dt_evaluate(const char* generated_dir, const char* reference_dir,
                             const char* report_path, char** out_report_json);

#ifdef __cplusplus
}
#endif

#endif /* DIFFTRANSFER_H */

#include "difftransfer.h"

#include <cstring>
#include <fstream>
#include <string>

#include "core/config.hpp"
#include "core/denoiser.hpp"
#include "core/error.hpp"
#include "core/metrics.hpp"
#include "core/toydata.hpp"
#include "core/trainer.hpp"
#include "core/transfer.hpp"

using namespace dt;

struct dt_checkpoint {
    Denoiser model;
    std::string dir;
};

namespace {

thread_local std::string g_last_error;

dt_status code_of(const Error& e) { return static_cast<dt_status>(static_cast<int>(e.code())); }

template <typename Fn>
dt_status guarded(Fn&& fn) {
    try {
        fn();
        return DT_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return code_of(e);
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return DT_ERR_INVALID;
    }
}

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void require(bool cond, const char* what) {
    if (!cond) fail(Err::invalid, what);
}

nn::UNetConfig unet_from_run(const config::RunConfig& rc) {
    nn::UNetConfig u;
    u.stage_filters = rc.stage_filters;
    u.blocks_per_stage = rc.blocks_per_stage;
    u.bottleneck_filters = rc.bottleneck_filters;
    u.time_embed_dims = rc.time_embed_dims;
    return u;
}

} // namespace

extern "C" {

const char* dt_status_name(dt_status s) {
    switch (s) {
        case DT_OK: return "ok";
        case DT_ERR_IO: return "io";
        case DT_ERR_FORMAT: return "format";
        case DT_ERR_CONFIG: return "config";
        case DT_ERR_DATASET: return "dataset";
        case DT_ERR_NUMERIC: return "numeric";
        case DT_ERR_INVALID: return "invalid";
    }
    return "unknown";
}

const char* dt_last_error(void) { return g_last_error.c_str(); }

void dt_string_free(char* s) { delete[] s; }

dt_status dt_config_resolve(const char* file_json, const char* overrides_json, char** out_json) {
    return guarded([&] {
        require(out_json != nullptr, "dt_config_resolve: out_json is null");
        std::string file, over;
        if (file_json) file = file_json;
        if (overrides_json) over = overrides_json;
        auto rc = config::resolve(file_json ? &file : nullptr, overrides_json ? &over : nullptr);
        *out_json = dup_string(rc.to_json());
    });
}

dt_status dt_make_toy_dataset(const char* out_dir, unsigned long long seed, int n_tracks,
                              double duration_s, int voices) {
    return guarded([&] {
        require(out_dir != nullptr, "dt_make_toy_dataset: out_dir is null");
        toydata::ToyConfig cfg;
        cfg.seed = seed;
        cfg.n_tracks = n_tracks;
        cfg.duration_s = duration_s;
        cfg.voices = voices < 1 ? 1 : voices;
        toydata::generate_paired_dataset(cfg, out_dir);
    });
}

dt_status dt_train(const char* data_dir, const char* ckpt_dir, const char* config_json,
                   dt_epoch_cb cb, void* user, int* best_epoch, double* best_loss) {
    return guarded([&] {
        require(data_dir && ckpt_dir, "dt_train: data_dir/ckpt_dir is null");
        std::string cfg_str = config_json ? config_json : "{}";
        auto rc = config::resolve(nullptr, &cfg_str);

        auto pairs = toydata::load_paired_corpus(data_dir, rc.direction == "a2b");
        if (pairs.empty()) fail(Err::dataset, std::string("no paired tracks under ") + data_dir);
        auto corpus = trainer::prepare_corpus(pairs);

        trainer::TrainConfig tc;
        tc.epochs = rc.epochs;
        tc.batch_size = rc.batch_size;
        tc.learning_rate = rc.learning_rate;
        tc.weight_decay = rc.weight_decay;
        tc.seed = rc.seed;
        tc.crops_per_track_per_epoch = rc.crops_per_track_per_epoch;

        schedule::ScheduleConfig sc{rc.max_signal_rate, rc.min_signal_rate};
        auto on_epoch = [&](int e, double l, double w) {
            if (cb) cb(e, l, w, user);
        };
        auto result = trainer::fit(corpus, tc, unet_from_run(rc), sc, ckpt_dir, on_epoch);
        if (best_epoch) *best_epoch = result.best_epoch;
        if (best_loss) *best_loss = result.best_loss;
    });
}

dt_status dt_checkpoint_open(const char* ckpt_dir, dt_checkpoint** out) {
    return guarded([&] {
        require(ckpt_dir && out, "dt_checkpoint_open: null argument");
        *out = new dt_checkpoint{Denoiser::load(ckpt_dir), ckpt_dir};
    });
}

void dt_checkpoint_close(dt_checkpoint* ckpt) { delete ckpt; }

dt_status dt_checkpoint_manifest(const dt_checkpoint* ckpt, char** out_json) {
    return guarded([&] {
        require(ckpt && out_json, "dt_checkpoint_manifest: null argument");
        *out_json = dup_string(Denoiser::manifest_json(ckpt->dir));
    });
}

dt_status dt_transfer_file(dt_checkpoint* ckpt, const char* in_wav, const char* out_wav,
                           const char* spec_out_path, int steps, unsigned long long seed) {
    return guarded([&] {
        require(ckpt && in_wav && out_wav, "dt_transfer_file: null argument");
        transfer::TransferOptions opt;
        opt.steps = steps;
        opt.seed = seed;
        AudioBuffer in = audio::load_audio(in_wav);
        auto res = transfer::transfer_track(in, ckpt->model, opt);
        audio::write_wav(out_wav, res.audio);
        if (spec_out_path) {
            spectro::save_spectrogram(spec_out_path, res.generated_logmel, ckpt->model.stats);
        }
    });
}

dt_status dt_transfer_dir(dt_checkpoint* ckpt, const char* in_dir, const char* out_dir, int steps,
                          unsigned long long seed, int dump_spectrograms, int* out_n_failed) {
    return guarded([&] {
        require(ckpt && in_dir && out_dir, "dt_transfer_dir: null argument");
        transfer::TransferOptions opt;
        opt.steps = steps;
        opt.seed = seed;
        opt.dump_spectrograms = dump_spectrograms != 0;
        auto res = transfer::transfer_corpus(in_dir, ckpt->model, out_dir, opt);
        if (out_n_failed) *out_n_failed = static_cast<int>(res.failed.size());
        if (!res.failed.empty()) {
            std::string msg = "transfer failed for " + std::to_string(res.failed.size()) + " file(s):";
            for (const auto& f : res.failed) msg += "\n  " + f;
            fail(Err::invalid, msg);
        }
    });
}

dt_status dt_evaluate(const char* generated_dir, const char* reference_dir,
                      const char* report_path, char** out_report_json) {
    return guarded([&] {
        require(generated_dir && reference_dir, "dt_evaluate: null argument");
        auto report = metrics::evaluate(generated_dir, reference_dir);
        std::string j = report.to_json();
        if (report_path) {
            std::ofstream f(report_path);
            if (!f) fail(Err::io, std::string("cannot write report: ") + report_path);
            f << j << "\n";
        }
        if (out_report_json) *out_report_json = dup_string(j);
    });
}

} // extern "C"

// Command-line front end. Deliberately built against the public C API only.
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "difftransfer.h"

namespace {

int die(dt_status s) {
    std::fprintf(stderr, "error [%s]: %s\n", dt_status_name(s), dt_last_error());
    return 1;
}

std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

// Flat JSON override object assembled from whichever flags were actually set.
struct Overrides {
    std::vector<std::string> entries;

    void add_num(const std::string& key, double v) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        entries.push_back("\"" + key + "\":" + buf);
    }
    void add_int(const std::string& key, long long v) {
        entries.push_back("\"" + key + "\":" + std::to_string(v));
    }
    void add_str(const std::string& key, const std::string& v) {
        entries.push_back("\"" + key + "\":\"" + json_escape(v) + "\"");
    }
    void add_int_array(const std::string& key, const std::vector<int>& v) {
        std::string s = "\"" + key + "\":[";
        for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
        entries.push_back(s + "]");
    }
    std::string json() const {
        std::string s = "{";
        for (size_t i = 0; i < entries.size(); ++i) s += (i ? "," : "") + entries[i];
        return s + "}";
    }
};

std::string read_file(const std::string& path, bool& ok) {
    std::ifstream f(path);
    ok = static_cast<bool>(f);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Resolve (file, flags) through the library and print the result; every run
// states its full configuration.
bool resolve_and_print(const std::string& config_path, const Overrides& ov, std::string& out) {
    std::string file_json;
    const char* file_ptr = nullptr;
    if (!config_path.empty()) {
        bool ok = false;
        file_json = read_file(config_path, ok);
        if (!ok) {
            std::fprintf(stderr, "error [io]: cannot read config file: %s\n", config_path.c_str());
            return false;
        }
        file_ptr = file_json.c_str();
    }
    std::string ov_json = ov.json();
    char* resolved = nullptr;
    dt_status s = dt_config_resolve(file_ptr, ov_json.c_str(), &resolved);
    if (s != DT_OK) {
        die(s);
        return false;
    }
    out = resolved;
    dt_string_free(resolved);
    std::printf("resolved config: %s\n", out.c_str());
    return true;
}

void epoch_printer(int epoch, double mean_loss, double wall_s, void*) {
    std::printf("{\"epoch\":%d,\"mean_loss\":%.6f,\"wall_s\":%.2f}\n", epoch, mean_loss, wall_s);
    std::fflush(stdout);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"difftransfer — paired timbre transfer with a conditional DDIM"};
    app.require_subcommand(1);

    // ---- make-toy-dataset ----
    auto* toy = app.add_subcommand("make-toy-dataset", "generate the synthetic paired corpus");
    std::string toy_out;
    unsigned long long toy_seed = 0;
    int toy_tracks = 10, toy_voices = 1;
    double toy_duration = 4.0;
    toy->add_option("--out", toy_out, "output directory")->required();
    toy->add_option("--seed", toy_seed, "corpus seed");
    toy->add_option("--tracks", toy_tracks, "number of track pairs");
    toy->add_option("--duration", toy_duration, "seconds per track");
    toy->add_option("--voices", toy_voices, "1 = monophonic, 2 = two-voice mixture");

    // ---- train ----
    auto* train = app.add_subcommand("train", "train a denoiser on a paired corpus");
    std::string train_data, train_ckpt, train_cfg_path, train_direction;
    Overrides train_ov;
    double lr = 0, wd = -1, max_sr = 0, min_sr = 0;
    long long epochs = 0, batch = 0, seed_flag = -1, crops = 0, blocks = 0, bottleneck = 0,
              embed_dims = 0;
    std::vector<int> stage_filters;
    train->add_option("--data", train_data, "corpus directory (two timbre subdirectories)")->required();
    train->add_option("--out", train_ckpt, "checkpoint output directory")->required();
    train->add_option("--config", train_cfg_path, "flat JSON config file");
    train->add_option("--epochs", epochs, "training epochs");
    train->add_option("--batch", batch, "batch size");
    train->add_option("--lr", lr, "learning rate");
    train->add_option("--weight-decay", wd, "decoupled weight decay");
    train->add_option("--seed", seed_flag, "training seed");
    train->add_option("--crops", crops, "random crops per track per epoch");
    train->add_option("--stage-filters", stage_filters, "encoder stage filter counts")->delimiter(',');
    train->add_option("--blocks-per-stage", blocks, "residual blocks per stage");
    train->add_option("--bottleneck", bottleneck, "bottleneck filter count");
    train->add_option("--time-embed-dims", embed_dims, "sinusoidal embedding size");
    train->add_option("--max-signal-rate", max_sr, "schedule clamp at t=0");
    train->add_option("--min-signal-rate", min_sr, "schedule clamp at t=1");
    train->add_option("--direction", train_direction, "a2b or b2a");

    // ---- transfer ----
    auto* transfer = app.add_subcommand("transfer", "convert every wav in a directory");
    std::string tr_ckpt, tr_in, tr_out, tr_cfg_path;
    long long tr_steps = 0, tr_seed = -1;
    bool tr_dump_spec = false;
    transfer->add_option("--ckpt", tr_ckpt, "checkpoint directory")->required();
    transfer->add_option("--in", tr_in, "input wav directory")->required();
    transfer->add_option("--out", tr_out, "output wav directory")->required();
    transfer->add_option("--config", tr_cfg_path, "flat JSON config file");
    transfer->add_option("--steps", tr_steps, "DDIM sampling steps");
    transfer->add_option("--seed", tr_seed, "noise seed (fixed per track)");
    transfer->add_flag("--dump-spec", tr_dump_spec, "also write generated .spec spectrograms");

    // ---- evaluate ----
    auto* evaluate = app.add_subcommand("evaluate", "FAD + Jaccard pitch distance report");
    std::string ev_gen, ev_ref, ev_report;
    evaluate->add_option("--generated", ev_gen, "generated wav directory")->required();
    evaluate->add_option("--reference", ev_ref, "reference wav directory")->required();
    evaluate->add_option("--report", ev_report, "write the JSON report here");

    // ---- info ----
    auto* info = app.add_subcommand("info", "print a checkpoint manifest");
    std::string info_ckpt;
    info->add_option("--ckpt", info_ckpt, "checkpoint directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (toy->parsed()) {
        std::printf("make-toy-dataset: out=%s seed=%llu tracks=%d duration=%.2f voices=%d\n",
                    toy_out.c_str(), toy_seed, toy_tracks, toy_duration, toy_voices);
        dt_status s = dt_make_toy_dataset(toy_out.c_str(), toy_seed, toy_tracks, toy_duration,
                                          toy_voices);
        if (s != DT_OK) return die(s);
        std::printf("wrote %d pairs under %s\n", toy_tracks, toy_out.c_str());
        return 0;
    }

    if (train->parsed()) {
        if (train->count("--epochs")) train_ov.add_int("epochs", epochs);
        if (train->count("--batch")) train_ov.add_int("batch_size", batch);
        if (train->count("--lr")) train_ov.add_num("learning_rate", lr);
        if (train->count("--weight-decay")) train_ov.add_num("weight_decay", wd);
        if (train->count("--seed")) train_ov.add_int("seed", seed_flag);
        if (train->count("--crops")) train_ov.add_int("crops_per_track_per_epoch", crops);
        if (train->count("--stage-filters")) train_ov.add_int_array("stage_filters", stage_filters);
        if (train->count("--blocks-per-stage")) train_ov.add_int("blocks_per_stage", blocks);
        if (train->count("--bottleneck")) train_ov.add_int("bottleneck_filters", bottleneck);
        if (train->count("--time-embed-dims")) train_ov.add_int("time_embed_dims", embed_dims);
        if (train->count("--max-signal-rate")) train_ov.add_num("max_signal_rate", max_sr);
        if (train->count("--min-signal-rate")) train_ov.add_num("min_signal_rate", min_sr);
        if (train->count("--direction")) train_ov.add_str("direction", train_direction);

        std::string resolved;
        if (!resolve_and_print(train_cfg_path, train_ov, resolved)) return 1;
        int best_epoch = 0;
        double best_loss = 0;
        dt_status s = dt_train(train_data.c_str(), train_ckpt.c_str(), resolved.c_str(),
                               epoch_printer, nullptr, &best_epoch, &best_loss);
        if (s != DT_OK) return die(s);
        std::printf("best epoch %d (mean_loss %.6f); checkpoint at %s\n", best_epoch, best_loss,
                    train_ckpt.c_str());
        return 0;
    }

    if (transfer->parsed()) {
        Overrides ov;
        if (transfer->count("--steps")) ov.add_int("steps", tr_steps);
        if (transfer->count("--seed")) ov.add_int("seed", tr_seed);
        std::string resolved;
        if (!resolve_and_print(tr_cfg_path, ov, resolved)) return 1;
        // the resolved config carries steps/seed whether they came from flags,
        // the file, or defaults
        auto rj = nlohmann::json::parse(resolved);
        const long long steps = rj.at("steps").get<long long>();
        const unsigned long long seed = rj.at("seed").get<unsigned long long>();
        dt_checkpoint* ckpt = nullptr;
        dt_status s = dt_checkpoint_open(tr_ckpt.c_str(), &ckpt);
        if (s != DT_OK) return die(s);
        int n_failed = 0;
        s = dt_transfer_dir(ckpt, tr_in.c_str(), tr_out.c_str(), static_cast<int>(steps), seed,
                            tr_dump_spec ? 1 : 0, &n_failed);
        dt_checkpoint_close(ckpt);
        if (s != DT_OK) return die(s);
        std::printf("transferred %s -> %s\n", tr_in.c_str(), tr_out.c_str());
        return 0;
    }

    if (evaluate->parsed()) {
        char* report = nullptr;
        dt_status s = dt_evaluate(ev_gen.c_str(), ev_ref.c_str(),
                                  ev_report.empty() ? nullptr : ev_report.c_str(), &report);
        if (s != DT_OK) return die(s);
        std::printf("%s\n", report);
        dt_string_free(report);
        return 0;
    }

    if (info->parsed()) {
        dt_checkpoint* ckpt = nullptr;
        dt_status s = dt_checkpoint_open(info_ckpt.c_str(), &ckpt);
        if (s != DT_OK) return die(s);
        char* manifest = nullptr;
        s = dt_checkpoint_manifest(ckpt, &manifest);
        dt_checkpoint_close(ckpt);
        if (s != DT_OK) return die(s);
        std::printf("%s\n", manifest);
        dt_string_free(manifest);
        return 0;
    }

    return 2;
}

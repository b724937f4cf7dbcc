#include "core/config.hpp"

#include <algorithm>
#include <cstdlib>

#include "core/error.hpp"

#include <json.hpp>

namespace dt::config {

using nlohmann::json;

namespace {

const std::vector<std::string>& valid_keys() {
    static const std::vector<std::string> keys{
        "learning_rate", "weight_decay", "batch_size", "epochs", "steps", "window_s", "overlap",
        "mel_bins", "seed", "crops_per_track_per_epoch", "stage_filters", "blocks_per_stage",
        "bottleneck_filters", "time_embed_dims", "max_signal_rate", "min_signal_rate",
        "griffin_lim_iters", "direction"};
    return keys;
}

size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (size_t j = 1; j <= b.size(); ++j) {
            const size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

[[noreturn]] void unknown_key(const std::string& key) {
    std::string best;
    size_t best_d = 99;
    for (const auto& k : valid_keys()) {
        const size_t d = edit_distance(key, k);
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    std::string msg = "unknown config key '" + key + "'";
    if (best_d <= 3) msg += " (did you mean '" + best + "'?)";
    msg += "; valid keys:";
    for (const auto& k : valid_keys()) msg += " " + k;
    fail(Err::config, msg);
}

double want_number(const json& v, const std::string& key) {
    if (!v.is_number()) fail(Err::config, "config key '" + key + "' expects a number, got " + std::string(v.type_name()));
    return v.get<double>();
}

int want_int(const json& v, const std::string& key) {
    if (!v.is_number_integer()) fail(Err::config, "config key '" + key + "' expects an integer, got " + std::string(v.type_name()));
    return v.get<int>();
}

void apply_flat(RunConfig& c, const json& obj) {
    if (!obj.is_object()) fail(Err::config, "config must be a flat JSON object");
    for (const auto& [key, v] : obj.items()) {
        if (std::find(valid_keys().begin(), valid_keys().end(), key) == valid_keys().end()) {
            unknown_key(key);
        }
        if (key == "learning_rate") c.learning_rate = want_number(v, key);
        else if (key == "weight_decay") c.weight_decay = want_number(v, key);
        else if (key == "batch_size") c.batch_size = want_int(v, key);
        else if (key == "epochs") c.epochs = want_int(v, key);
        else if (key == "steps") c.steps = want_int(v, key);
        else if (key == "window_s") c.window_s = want_number(v, key);
        else if (key == "overlap") c.overlap = want_number(v, key);
        else if (key == "mel_bins") c.mel_bins = want_int(v, key);
        else if (key == "seed") {
            if (!v.is_number_integer()) fail(Err::config, "config key 'seed' expects an integer, got " + std::string(v.type_name()));
            c.seed = v.get<uint64_t>();
        } else if (key == "crops_per_track_per_epoch") c.crops_per_track_per_epoch = want_int(v, key);
        else if (key == "stage_filters") {
            if (!v.is_array() || v.empty()) fail(Err::config, "config key 'stage_filters' expects a non-empty array of integers");
            std::vector<int> f;
            for (const auto& e : v) f.push_back(want_int(e, key));
            c.stage_filters = std::move(f);
        } else if (key == "blocks_per_stage") c.blocks_per_stage = want_int(v, key);
        else if (key == "bottleneck_filters") c.bottleneck_filters = want_int(v, key);
        else if (key == "time_embed_dims") c.time_embed_dims = want_int(v, key);
        else if (key == "max_signal_rate") c.max_signal_rate = want_number(v, key);
        else if (key == "min_signal_rate") c.min_signal_rate = want_number(v, key);
        else if (key == "griffin_lim_iters") c.griffin_lim_iters = want_int(v, key);
        else if (key == "direction") {
            if (!v.is_string()) fail(Err::config, "config key 'direction' expects a string (a2b|b2a)");
            c.direction = v.get<std::string>();
        }
    }
}

void validate(const RunConfig& c) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0)) fail(Err::config, std::string("config key '") + name + "' must be positive");
    };
    positive(c.learning_rate, "learning_rate");
    if (c.weight_decay < 0) fail(Err::config, "config key 'weight_decay' must be >= 0");
    positive(c.batch_size, "batch_size");
    positive(c.epochs, "epochs");
    positive(c.steps, "steps");
    positive(c.crops_per_track_per_epoch, "crops_per_track_per_epoch");
    positive(c.blocks_per_stage, "blocks_per_stage");
    positive(c.bottleneck_filters, "bottleneck_filters");
    positive(c.griffin_lim_iters, "griffin_lim_iters");
    for (int f : c.stage_filters) positive(f, "stage_filters");
    // the DSP front end is fixed-rate; reject unsupported geometry explicitly
    if (std::abs(c.window_s - 0.020) > 1e-9) fail(Err::config, "config key 'window_s': only 0.020 is supported");
    if (std::abs(c.overlap - 0.5) > 1e-9) fail(Err::config, "config key 'overlap': only 0.5 is supported");
    if (c.mel_bins != 128) fail(Err::config, "config key 'mel_bins': only 128 is supported");
    if (!(c.min_signal_rate > 0 && c.min_signal_rate < c.max_signal_rate && c.max_signal_rate < 1)) {
        fail(Err::config, "schedule clamps must satisfy 0 < min_signal_rate < max_signal_rate < 1");
    }
    if (c.time_embed_dims < 2 || c.time_embed_dims % 2 != 0) {
        fail(Err::config, "config key 'time_embed_dims' must be even and >= 2");
    }
    if (c.direction != "a2b" && c.direction != "b2a") {
        fail(Err::config, "config key 'direction' must be 'a2b' or 'b2a'");
    }
}

} // namespace

std::string RunConfig::to_json(int indent) const {
    json j{{"learning_rate", learning_rate},
           {"weight_decay", weight_decay},
           {"batch_size", batch_size},
           {"epochs", epochs},
           {"steps", steps},
           {"window_s", window_s},
           {"overlap", overlap},
           {"mel_bins", mel_bins},
           {"seed", seed},
           {"crops_per_track_per_epoch", crops_per_track_per_epoch},
           {"stage_filters", stage_filters},
           {"blocks_per_stage", blocks_per_stage},
           {"bottleneck_filters", bottleneck_filters},
           {"time_embed_dims", time_embed_dims},
           {"max_signal_rate", max_signal_rate},
           {"min_signal_rate", min_signal_rate},
           {"griffin_lim_iters", griffin_lim_iters},
           {"direction", direction}};
    return j.dump(indent);
}

RunConfig resolve(const std::string* file_json, const std::string* overrides_json) {
    RunConfig c;
    if (const char* env = std::getenv("DIFFTRANSFER_SEED")) {
        c.seed = std::strtoull(env, nullptr, 10); // fallback only; file and flags win
    }
    if (file_json) {
        json j = json::parse(*file_json, nullptr, false);
        if (j.is_discarded()) fail(Err::config, "config file is not valid JSON");
        apply_flat(c, j);
    }
    if (overrides_json) {
        json j = json::parse(*overrides_json, nullptr, false);
        if (j.is_discarded()) fail(Err::config, "config overrides are not valid JSON");
        apply_flat(c, j);
    }
    validate(c);
    return c;
}

} // namespace dt::config

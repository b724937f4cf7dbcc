#include "core/toydata.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "core/error.hpp"
#include "core/rng.hpp"

#include <json.hpp>

namespace dt::toydata {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kSr = audio::kSampleRate;

struct Note {
    double onset_s, dur_s;
    int midi;
};

std::vector<Note> draw_notes(Rng& rng, double duration_s) {
    std::vector<Note> notes;
    double t = 0.0;
    while (t < duration_s - 0.2) {
        Note n;
        n.onset_s = t;
        n.dur_s = rng.uniform(0.25, 1.0);
        n.midi = rng.uniform_int(48, 84);
        notes.push_back(n);
        t += n.dur_s;
        if (rng.uniform01() < 0.3) t += rng.uniform(0.05, 0.3); // rest
    }
    return notes;
}

void render_voice(const std::vector<Note>& notes, bool timbre_b, std::vector<float>& out) {
    const double decay_tau = timbre_b ? 0.8 : 0.4;
    const int n_harm = timbre_b ? 8 : 1;
    const double attack_s = 0.005;
    for (const auto& note : notes) {
        const double f0 = 440.0 * std::pow(2.0, (note.midi - 69) / 12.0);
        const int start = static_cast<int>(note.onset_s * kSr);
        const int len = std::min(static_cast<int>(note.dur_s * kSr),
                                 static_cast<int>(out.size()) - start);
        for (int i = 0; i < len; ++i) {
            const double tt = static_cast<double>(i) / kSr;
            const double env = std::min(tt / attack_s, 1.0) * std::exp(-tt / decay_tau);
            double s = 0.0;
            for (int k = 1; k <= n_harm; ++k) {
                const double fk = f0 * k;
                if (fk >= 0.48 * kSr) break; // keep it band-limited
                s += std::sin(2.0 * kPi * fk * tt) / k;
            }
            out[start + i] += static_cast<float>(env * s);
        }
    }
}

} // namespace

AudioBuffer render_toy_track(uint64_t track_seed, double duration_s, int voices, bool timbre_b) {
    AudioBuffer buf;
    buf.sample_rate = kSr;
    buf.samples.assign(static_cast<size_t>(duration_s * kSr), 0.0f);
    for (int v = 0; v < voices; ++v) {
        // same notes for both timbres of a pair: the voice rng depends only on
        // the track seed and voice index
        Rng rng(track_seed * 977 + static_cast<uint64_t>(v) * 131071 + 17);
        render_voice(draw_notes(rng, duration_s), timbre_b, buf.samples);
    }
    float peak = 0.0f;
    for (float s : buf.samples) peak = std::max(peak, std::abs(s));
    if (peak > 0.0f) {
        const float g = 0.9f / peak;
        for (float& s : buf.samples) s *= g;
    }
    return buf;
}

std::string generate_paired_dataset(const ToyConfig& cfg, const std::string& out_dir) {
    if (cfg.n_tracks < 1) fail(Err::invalid, "toydata: n_tracks must be >= 1");
    if (cfg.duration_s < 1.0) fail(Err::invalid, "toydata: duration_s must be >= 1");
    fs::create_directories(fs::path(out_dir) / "timbreA");
    fs::create_directories(fs::path(out_dir) / "timbreB");

    nlohmann::json manifest{{"seed", cfg.seed},
                            {"n_tracks", cfg.n_tracks},
                            {"duration_s", cfg.duration_s},
                            {"voices", cfg.voices},
                            {"timbre_a", "sine, exponential decay"},
                            {"timbre_b", "band-limited sawtooth (8 harmonics), slower decay"},
                            {"pairs", nlohmann::json::array()}};
    for (int i = 0; i < cfg.n_tracks; ++i) {
        const uint64_t track_seed = cfg.seed + static_cast<uint64_t>(i);
        char name[32];
        std::snprintf(name, sizeof(name), "track_%03d", i);
        auto a = render_toy_track(track_seed, cfg.duration_s, cfg.voices, false);
        auto b = render_toy_track(track_seed, cfg.duration_s, cfg.voices, true);
        const auto pa = fs::path(out_dir) / "timbreA" / (std::string(name) + ".wav");
        const auto pb = fs::path(out_dir) / "timbreB" / (std::string(name) + ".wav");
        audio::write_wav(pa.string(), a);
        audio::write_wav(pb.string(), b);
        manifest["pairs"].push_back({{"name", name},
                                     {"a", "timbreA/" + std::string(name) + ".wav"},
                                     {"b", "timbreB/" + std::string(name) + ".wav"}});
    }
    const auto mpath = fs::path(out_dir) / "manifest.json";
    std::ofstream f(mpath);
    if (!f) fail(Err::io, "cannot write manifest: " + mpath.string());
    f << manifest.dump(2) << "\n";
    return mpath.string();
}

std::vector<PairPaths> load_paired_corpus(const std::string& dir, bool a_to_b) {
    if (!fs::is_directory(dir)) fail(Err::io, "corpus directory not found: " + dir);
    std::vector<fs::path> subdirs;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_directory()) subdirs.push_back(e.path());
    }
    std::sort(subdirs.begin(), subdirs.end());
    if (subdirs.size() != 2) {
        fail(Err::dataset, "expected exactly two timbre subdirectories in " + dir + ", found " +
                               std::to_string(subdirs.size()));
    }
    auto list_wavs = [](const fs::path& d) {
        std::map<std::string, std::string> out;
        for (const auto& e : fs::directory_iterator(d)) {
            if (e.is_regular_file() && e.path().extension() == ".wav") {
                out[e.path().stem().string()] = e.path().string();
            }
        }
        return out;
    };
    auto a = list_wavs(subdirs[0]);
    auto b = list_wavs(subdirs[1]);
    for (const auto& [name, path] : a) {
        if (!b.count(name)) fail(Err::dataset, "unpaired track (missing in " +
                                                   subdirs[1].filename().string() + "): " + path);
    }
    for (const auto& [name, path] : b) {
        if (!a.count(name)) fail(Err::dataset, "unpaired track (missing in " +
                                                   subdirs[0].filename().string() + "): " + path);
    }
    std::vector<PairPaths> pairs;
    pairs.reserve(a.size());
    for (const auto& [name, pa] : a) {
        const std::string& pb = b.at(name);
        pairs.push_back(a_to_b ? PairPaths{name, pa, pb} : PairPaths{name, pb, pa});
    }
    return pairs;
}

} // namespace dt::toydata

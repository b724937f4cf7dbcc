#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "core/audio.hpp"
#include "core/error.hpp"
#include "core/metrics.hpp"
#include "core/toydata.hpp"

using namespace dt;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    auto p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("generate_paired_dataset: layout, lengths, sanity") {
    auto dir = fresh_dir("dt_toy_a");
    toydata::ToyConfig cfg;
    cfg.seed = 3;
    cfg.n_tracks = 10;
    cfg.duration_s = 4.0;
    toydata::generate_paired_dataset(cfg, dir.string());

    int count_a = 0, count_b = 0;
    for (const auto& e : fs::directory_iterator(dir / "timbreA")) count_a += e.is_regular_file();
    for (const auto& e : fs::directory_iterator(dir / "timbreB")) count_b += e.is_regular_file();
    CHECK(count_a == 10);
    CHECK(count_b == 10);
    CHECK(fs::exists(dir / "manifest.json"));

    AudioBuffer a = audio::decode_wav((dir / "timbreA" / "track_000.wav").string());
    CHECK(a.samples.size() == 64000); // 4 s at 16 kHz
    float peak = 0;
    for (float s : a.samples) {
        CHECK(std::isfinite(s));
        peak = std::max(peak, std::abs(s));
    }
    CHECK(peak <= 1.0f);
    CHECK(peak > 0.1f);
}

TEST_CASE("generate_paired_dataset: bit-identical under a fixed seed") {
    auto d1 = fresh_dir("dt_toy_b1");
    auto d2 = fresh_dir("dt_toy_b2");
    toydata::ToyConfig cfg;
    cfg.seed = 42;
    cfg.n_tracks = 3;
    cfg.duration_s = 2.0;
    toydata::generate_paired_dataset(cfg, d1.string());
    toydata::generate_paired_dataset(cfg, d2.string());
    for (const char* rel :
         {"timbreA/track_000.wav", "timbreB/track_001.wav", "timbreA/track_002.wav"}) {
        CHECK(file_bytes(d1 / rel) == file_bytes(d2 / rel));
    }
}

TEST_CASE("paired timbres share pitch content (JD <= 0.1)") {
    auto dir = fresh_dir("dt_toy_jd");
    toydata::ToyConfig cfg;
    cfg.seed = 11;
    cfg.n_tracks = 5;
    cfg.duration_s = 4.0;
    toydata::generate_paired_dataset(cfg, dir.string());
    for (int i = 0; i < 5; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "track_%03d.wav", i);
        auto a = audio::load_audio((dir / "timbreA" / name).string());
        auto b = audio::load_audio((dir / "timbreB" / name).string());
        double jd = metrics::jaccard_distance(metrics::extract_pitch_set(a),
                                              metrics::extract_pitch_set(b));
        INFO("track ", i, " jd ", jd);
        CHECK(jd <= 0.1);
    }
}

TEST_CASE("load_paired_corpus: matching, direction, errors") {
    auto dir = fresh_dir("dt_toy_load");
    toydata::ToyConfig cfg;
    cfg.seed = 4;
    cfg.n_tracks = 4;
    cfg.duration_s = 1.0;
    toydata::generate_paired_dataset(cfg, dir.string());

    auto pairs = toydata::load_paired_corpus(dir.string());
    REQUIRE(pairs.size() == 4);
    CHECK(pairs[0].name == "track_000");
    CHECK(pairs[0].x_path.find("timbreA") != std::string::npos);
    CHECK(pairs[0].y_path.find("timbreB") != std::string::npos);

    auto rev = toydata::load_paired_corpus(dir.string(), /*a_to_b=*/false);
    CHECK(rev[0].x_path.find("timbreB") != std::string::npos);

    // an extra file on one side must raise and name the offender
    std::ofstream((dir / "timbreA" / "stray.wav").string()) << "x";
    try {
        toydata::load_paired_corpus(dir.string());
        FAIL("expected dataset error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("stray") != std::string::npos);
        CHECK(e.code() == Err::dataset);
    }
    fs::remove(dir / "timbreA" / "stray.wav");

    // empty corpus: no pairs, no error
    auto empty = fresh_dir("dt_toy_empty");
    fs::create_directories(empty / "timbreA");
    fs::create_directories(empty / "timbreB");
    CHECK(toydata::load_paired_corpus(empty.string()).empty());

    // missing subdirectory layout
    auto bad = fresh_dir("dt_toy_bad");
    fs::create_directories(bad / "only_one");
    CHECK_THROWS_AS(toydata::load_paired_corpus(bad.string()), Error);
}

TEST_CASE("mixture mode: two-voice tracks render and stay finite") {
    auto b = toydata::render_toy_track(5, 2.0, /*voices=*/2, /*timbre_b=*/true);
    CHECK(b.samples.size() == 32000);
    float peak = 0;
    for (float s : b.samples) {
        CHECK(std::isfinite(s));
        peak = std::max(peak, std::abs(s));
    }
    CHECK(peak <= 1.0f);
}

// Exercises the public C API surface end to end at desk scale; uses only
// difftransfer.h plus header-only utilities, exactly like an external caller.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "difftransfer.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path work_root() {
    static fs::path p = [] {
        auto root = fs::temp_directory_path() / "dt_capi_test";
        fs::remove_all(root);
        fs::create_directories(root);
        return root;
    }();
    return p;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

int g_epochs_seen = 0;
void count_epochs(int, double, double, void*) { ++g_epochs_seen; }

} // namespace

TEST_CASE("status names and error text") {
    CHECK(std::string(dt_status_name(DT_OK)) == "ok");
    CHECK(std::string(dt_status_name(DT_ERR_CONFIG)) == "config");
    dt_checkpoint* ckpt = nullptr;
    CHECK(dt_checkpoint_open("/no/such/dir", &ckpt) != DT_OK);
    CHECK(std::string(dt_last_error()).size() > 0);
}

TEST_CASE("config resolution via the C surface") {
    char* out = nullptr;
    REQUIRE(dt_config_resolve(nullptr, nullptr, &out) == DT_OK);
    auto j = json::parse(out);
    dt_string_free(out);
    CHECK(j.at("learning_rate").get<double>() == doctest::Approx(2e-5));
    CHECK(j.at("batch_size").get<int>() == 16);

    CHECK(dt_config_resolve(R"({"learning_rte":1})", nullptr, &out) == DT_ERR_CONFIG);
    CHECK(std::string(dt_last_error()).find("learning_rate") != std::string::npos);
}

TEST_CASE("toy dataset, training, transfer, evaluation through the shared library") {
    const auto root = work_root();
    const auto data = root / "data";
    const auto ckpt_dir = root / "ckpt";

    REQUIRE(dt_make_toy_dataset(data.string().c_str(), 1, 3, 2.0, 1) == DT_OK);
    CHECK(fs::exists(data / "timbreA" / "track_002.wav"));

    // tiny architecture, two epochs: mechanics only
    json cfg{{"epochs", 2},
             {"batch_size", 2},
             {"learning_rate", 1e-3},
             {"stage_filters", {4, 4, 8}},
             {"blocks_per_stage", 1},
             {"bottleneck_filters", 8},
             {"time_embed_dims", 4},
             {"seed", 5},
             {"crops_per_track_per_epoch", 1}};
    g_epochs_seen = 0;
    int best_epoch = 0;
    double best_loss = 0;
    REQUIRE(dt_train(data.string().c_str(), ckpt_dir.string().c_str(), cfg.dump().c_str(),
                     count_epochs, nullptr, &best_epoch, &best_loss) == DT_OK);
    CHECK(g_epochs_seen == 2);
    CHECK(best_epoch >= 1);
    CHECK(best_epoch <= 2);
    CHECK(best_loss > 0.0);

    dt_checkpoint* ckpt = nullptr;
    REQUIRE(dt_checkpoint_open(ckpt_dir.string().c_str(), &ckpt) == DT_OK);
    char* manifest = nullptr;
    REQUIRE(dt_checkpoint_manifest(ckpt, &manifest) == DT_OK);
    auto mj = json::parse(manifest);
    dt_string_free(manifest);
    CHECK(mj.at("schedule").at("max_signal_rate").get<double>() == doctest::Approx(0.95));
    CHECK(mj.at("schedule").at("min_signal_rate").get<double>() == doctest::Approx(0.02));
    CHECK(mj.at("normalization").contains("lo"));
    CHECK(mj.at("normalization").contains("hi"));
    CHECK(mj.at("training_meta").at("epoch").get<int>() == best_epoch);

    // single-file transfer, determinism through the .spec dump
    const auto in_wav = (data / "timbreA" / "track_000.wav").string();
    const auto out1 = (root / "out1.wav").string();
    const auto out2 = (root / "out2.wav").string();
    const auto spec1 = (root / "out1.spec").string();
    const auto spec2 = (root / "out2.spec").string();
    REQUIRE(dt_transfer_file(ckpt, in_wav.c_str(), out1.c_str(), spec1.c_str(), 5, 9) == DT_OK);
    REQUIRE(dt_transfer_file(ckpt, in_wav.c_str(), out2.c_str(), spec2.c_str(), 5, 9) == DT_OK);
    CHECK(file_bytes(spec1) == file_bytes(spec2)); // same seed: bit-identical
    CHECK(file_bytes(out1) == file_bytes(out2));

    const auto spec3 = (root / "out3.spec").string();
    REQUIRE(dt_transfer_file(ckpt, in_wav.c_str(), (root / "out3.wav").string().c_str(),
                             spec3.c_str(), 5, 10) == DT_OK);
    CHECK(file_bytes(spec1) != file_bytes(spec3)); // different seed: different output

    // directory transfer
    const auto gen_dir = root / "gen";
    int n_failed = -1;
    REQUIRE(dt_transfer_dir(ckpt, (data / "timbreA").string().c_str(),
                            gen_dir.string().c_str(), 5, 0, 0, &n_failed) == DT_OK);
    CHECK(n_failed == 0);
    CHECK(fs::exists(gen_dir / "track_000.wav"));
    CHECK(fs::exists(gen_dir / "track_002.wav"));
    dt_checkpoint_close(ckpt);

    // evaluation: a corpus against itself is exact
    char* report = nullptr;
    const auto report_path = (root / "report.json").string();
    REQUIRE(dt_evaluate((data / "timbreB").string().c_str(), (data / "timbreB").string().c_str(),
                        report_path.c_str(), &report) == DT_OK);
    auto rj = json::parse(report);
    dt_string_free(report);
    CHECK(rj.at("fad").get<double>() < 1e-6);
    CHECK(rj.at("jd_mean").get<double>() == 0.0);
    CHECK(rj.at("jd_per_track").size() == 3);
    CHECK(rj.contains("embedding_name"));
    CHECK(rj.contains("pitch_extractor_name"));
    CHECK(fs::exists(report_path));
}

TEST_CASE("dataset errors surface through the C API") {
    const auto root = work_root();
    const auto broken = root / "broken";
    fs::create_directories(broken / "timbreA");
    fs::create_directories(broken / "timbreB");
    std::ofstream(broken / "timbreA" / "lonely.wav") << "not really a wav";
    CHECK(dt_train(broken.string().c_str(), (root / "ck2").string().c_str(), nullptr, nullptr,
                   nullptr, nullptr, nullptr) == DT_ERR_DATASET);
    CHECK(std::string(dt_last_error()).find("lonely") != std::string::npos);
}

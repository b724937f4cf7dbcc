#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <string>

#include "core/config.hpp"
#include "core/error.hpp"

using namespace dt;

namespace {

config::RunConfig resolve_strings(const char* file, const char* over) {
    std::string f = file ? file : "", o = over ? over : "";
    return config::resolve(file ? &f : nullptr, over ? &o : nullptr);
}

std::string error_text(const char* file, const char* over) {
    try {
        resolve_strings(file, over);
        return "";
    } catch (const Error& e) {
        return e.what();
    }
}

} // namespace

TEST_CASE("defaults mirror the published training setup") {
    unsetenv("DIFFTRANSFER_SEED");
    auto c = resolve_strings(nullptr, nullptr);
    CHECK(c.learning_rate == doctest::Approx(2e-5));
    CHECK(c.weight_decay == doctest::Approx(1e-4));
    CHECK(c.batch_size == 16);
    CHECK(c.epochs == 5000);
    CHECK(c.steps == 50);
    CHECK(c.window_s == doctest::Approx(0.020));
    CHECK(c.overlap == doctest::Approx(0.5));
    CHECK(c.mel_bins == 128);
    CHECK(c.seed == 0);
    CHECK(c.stage_filters == std::vector<int>{64, 128, 256});
    CHECK(c.blocks_per_stage == 4);
    CHECK(c.bottleneck_filters == 512);
    CHECK(c.max_signal_rate == doctest::Approx(0.95));
    CHECK(c.min_signal_rate == doctest::Approx(0.02));
}

TEST_CASE("precedence: flags beat file beats defaults") {
    auto c = resolve_strings(R"({"epochs":200,"batch_size":8})", R"({"epochs":300})");
    CHECK(c.epochs == 300);   // flag wins
    CHECK(c.batch_size == 8); // file wins over default
    CHECK(c.steps == 50);     // untouched default
}

TEST_CASE("unknown keys are rejected with a suggestion") {
    auto msg = error_text(R"({"learning_rte":0.01})", nullptr);
    CHECK(msg.find("learning_rte") != std::string::npos);
    CHECK(msg.find("did you mean 'learning_rate'") != std::string::npos);
    CHECK(msg.find("valid keys") != std::string::npos);
}

TEST_CASE("type mismatches name the expected type") {
    auto msg = error_text(R"({"epochs":"many"})", nullptr);
    CHECK(msg.find("epochs") != std::string::npos);
    CHECK(msg.find("integer") != std::string::npos);

    msg = error_text(R"({"stage_filters":3})", nullptr);
    CHECK(msg.find("array") != std::string::npos);

    msg = error_text("not json at all", nullptr);
    CHECK(msg.find("JSON") != std::string::npos);
}

TEST_CASE("seed fallback comes from the environment, loses to file and flags") {
    setenv("DIFFTRANSFER_SEED", "77", 1);
    CHECK(resolve_strings(nullptr, nullptr).seed == 77);
    CHECK(resolve_strings(R"({"seed":5})", nullptr).seed == 5);
    CHECK(resolve_strings(R"({"seed":5})", R"({"seed":9})").seed == 9);
    unsetenv("DIFFTRANSFER_SEED");
}

TEST_CASE("unsupported DSP geometry and bad values are rejected") {
    CHECK(!error_text(R"({"window_s":0.030})", nullptr).empty());
    CHECK(!error_text(R"({"overlap":0.75})", nullptr).empty());
    CHECK(!error_text(R"({"mel_bins":80})", nullptr).empty());
    CHECK(!error_text(R"({"epochs":-5})", nullptr).empty());
    CHECK(!error_text(R"({"direction":"sideways"})", nullptr).empty());
    CHECK(!error_text(R"({"min_signal_rate":0.99})", nullptr).empty());
    CHECK(!error_text(R"({"time_embed_dims":7})", nullptr).empty());
}

TEST_CASE("resolved config round-trips through its own JSON") {
    auto c = resolve_strings(R"({"epochs":42,"stage_filters":[8,16],"direction":"b2a"})", nullptr);
    auto j = c.to_json();
    auto c2 = resolve_strings(j.c_str(), nullptr);
    CHECK(c2.epochs == 42);
    CHECK(c2.stage_filters == std::vector<int>{8, 16});
    CHECK(c2.direction == "b2a");
    CHECK(c2.learning_rate == doctest::Approx(c.learning_rate));
}

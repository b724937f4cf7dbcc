#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include "core/audio.hpp"
#include "core/error.hpp"
#include "core/spectro.hpp"

using namespace dt;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

fs::path temp_dir() {
    auto p = fs::temp_directory_path() / "dt_spectro_test";
    fs::create_directories(p);
    return p;
}

AudioBuffer sine(double freq, double seconds, double amp = 0.8) {
    AudioBuffer b;
    b.sample_rate = audio::kSampleRate;
    size_t n = static_cast<size_t>(seconds * audio::kSampleRate);
    b.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
        b.samples[i] = static_cast<float>(amp * std::sin(2.0 * kPi * freq * i / audio::kSampleRate));
    }
    return b;
}

// minimal interleaved 16-bit writer for arbitrary rate/channels (the library
// writer is mono-only by design)
void write_wav_raw(const std::string& path, const std::vector<int16_t>& interleaved, int rate,
                   int channels) {
    std::ofstream f(path, std::ios::binary);
    auto u32 = [&](uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
    auto u16 = [&](uint16_t v) { f.write(reinterpret_cast<const char*>(&v), 2); };
    uint32_t data_len = static_cast<uint32_t>(interleaved.size() * 2);
    f.write("RIFF", 4);
    u32(36 + data_len);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    u32(16);
    u16(1);
    u16(static_cast<uint16_t>(channels));
    u32(static_cast<uint32_t>(rate));
    u32(static_cast<uint32_t>(rate * channels * 2));
    u16(static_cast<uint16_t>(channels * 2));
    u16(16);
    f.write("data", 4);
    u32(data_len);
    f.write(reinterpret_cast<const char*>(interleaved.data()), data_len);
}

// test-side HTK oracle: the set of mel filters whose support contains f
std::vector<int> bracketing_filters(double f) {
    auto mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
    auto imel = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
    const double lo = mel(0.0), hi = mel(8000.0);
    std::vector<double> edge(130);
    for (int i = 0; i < 130; ++i) edge[i] = imel(lo + (hi - lo) * i / 129.0);
    std::vector<int> out;
    for (int m = 0; m < 128; ++m) {
        if (edge[m] <= f && f <= edge[m + 2]) out.push_back(m);
    }
    return out;
}

} // namespace

TEST_CASE("load_audio: stereo 44.1 kHz becomes mono 16 kHz") {
    const auto path = (temp_dir() / "stereo.wav").string();
    std::vector<int16_t> frames(441000 * 2);
    for (size_t i = 0; i < 441000; ++i) {
        double v = 0.5 * std::sin(2.0 * kPi * 440.0 * i / 44100.0);
        frames[2 * i] = static_cast<int16_t>(v * 32767);
        frames[2 * i + 1] = static_cast<int16_t>(v * 32767);
    }
    write_wav_raw(path, frames, 44100, 2);
    AudioBuffer b = audio::load_audio(path);
    CHECK(b.sample_rate == 16000);
    CHECK(b.samples.size() == 160000);
    float peak = 0;
    for (float s : b.samples) peak = std::max(peak, std::abs(s));
    CHECK(peak == doctest::Approx(1.0f).epsilon(1e-3));
}

TEST_CASE("load_audio: all-zero file keeps zeros (no normalization blowup)") {
    const auto path = (temp_dir() / "zeros.wav").string();
    write_wav_raw(path, std::vector<int16_t>(16000, 0), 16000, 1);
    AudioBuffer b = audio::load_audio(path);
    for (float s : b.samples) CHECK(s == 0.0f);
}

TEST_CASE("load_audio: mono 16 kHz 10 s passes through up to peak scaling") {
    const auto path = (temp_dir() / "mono.wav").string();
    std::vector<int16_t> frames(160000);
    for (size_t i = 0; i < frames.size(); ++i) {
        frames[i] = static_cast<int16_t>(16000 * std::sin(2.0 * kPi * 220.0 * i / 16000.0));
    }
    write_wav_raw(path, frames, 16000, 1);
    AudioBuffer b = audio::load_audio(path);
    CHECK(b.samples.size() == 160000);
    // peak-normalized copy of the same waveform: correlation stays ~1
    double dot = 0, na = 0, nb = 0;
    for (size_t i = 0; i < frames.size(); ++i) {
        double x = frames[i] / 32768.0, y = b.samples[i];
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    CHECK(dot / std::sqrt(na * nb) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("load_audio: missing and undecodable files raise") {
    CHECK_THROWS_AS(audio::load_audio("/nonexistent/file.wav"), Error);
    const auto path = (temp_dir() / "garbage.wav").string();
    std::ofstream(path) << "this is not a wav";
    CHECK_THROWS_AS(audio::load_audio(path), Error);
}

TEST_CASE("stft: frame count and bin count") {
    AudioBuffer b = sine(440.0, 1.0);
    auto s = spectro::stft(b);
    CHECK(s.re.rows == 161);
    CHECK(s.frames() == 101);

    // frame-count formula across lengths
    for (int len : {1, 159, 160, 161, 999, 4800}) {
        AudioBuffer x;
        x.samples.assign(static_cast<size_t>(len), 0.1f);
        CHECK(spectro::stft(x).frames() == 1 + len / 160);
    }
}

TEST_CASE("stft: all-zero input gives all-zero magnitudes") {
    AudioBuffer b;
    b.samples.assign(16000, 0.0f);
    auto mag = spectro::magnitude(spectro::stft(b));
    for (double v : mag.v) CHECK(v == 0.0);
}

TEST_CASE("stft: 440 Hz sine peaks at bin 9") {
    AudioBuffer b = sine(440.0, 1.0);
    auto mag = spectro::magnitude(spectro::stft(b));
    // skip the first/last frames where the window underfills
    for (int f = 2; f < mag.cols - 2; ++f) {
        int arg = 0;
        for (int k = 1; k < mag.rows; ++k) {
            if (mag.at(k, f) > mag.at(arg, f)) arg = k;
        }
        CHECK(arg == 9);
    }
}

TEST_CASE("log_mel: floor, shape, wrong input") {
    Mat zeros(161, 4);
    Mat lm = spectro::log_mel(zeros);
    CHECK(lm.rows == 128);
    CHECK(lm.cols == 4);
    for (double v : lm.v) CHECK(v == doctest::Approx(std::log(1e-5)).epsilon(1e-12));

    CHECK(spectro::mel_filterbank().rows == 128);
    CHECK(spectro::mel_filterbank().cols == 161);

    Mat wrong(100, 4);
    CHECK_THROWS_AS(spectro::log_mel(wrong), Error);
}

TEST_CASE("log_mel: 440 Hz sine lands in the bracketing mel filter") {
    AudioBuffer b = sine(440.0, 1.0);
    auto lm = spectro::log_mel(spectro::magnitude(spectro::stft(b)));
    auto expected = bracketing_filters(440.0);
    REQUIRE(!expected.empty());
    for (int f = 2; f < lm.cols - 2; ++f) {
        int arg = 0;
        for (int r = 1; r < lm.rows; ++r) {
            if (lm.at(r, f) > lm.at(arg, f)) arg = r;
        }
        bool in_bracket = false;
        for (int m : expected) in_bracket |= (arg == m);
        CHECK(in_bracket);
    }
}

TEST_CASE("log_mel: energy monotonicity under gain") {
    AudioBuffer b = sine(523.25, 0.5, 0.4);
    auto lm1 = spectro::log_mel(spectro::magnitude(spectro::stft(b)));
    for (auto& s : b.samples) s *= 2.0f;
    auto lm2 = spectro::log_mel(spectro::magnitude(spectro::stft(b)));
    for (size_t i = 0; i < lm1.size(); ++i) CHECK(lm2.v[i] >= lm1.v[i] - 1e-12);
}

TEST_CASE("normalize: endpoints, round trip, degenerate") {
    spectro::NormalizationStats st{-11.5, 4.5};
    Mat m(2, 2);
    m.at(0, 0) = st.lo;
    m.at(0, 1) = st.hi;
    m.at(1, 0) = -3.5;
    m.at(1, 1) = 99.0; // clipped
    bool degenerate = true;
    Mat n = spectro::normalize(m, st, &degenerate);
    CHECK(!degenerate);
    CHECK(n.at(0, 0) == doctest::Approx(-1.0));
    CHECK(n.at(0, 1) == doctest::Approx(1.0));
    CHECK(n.at(1, 1) == doctest::Approx(1.0));

    Mat back = spectro::denormalize(n, st);
    CHECK(back.at(0, 0) == doctest::Approx(st.lo).epsilon(1e-9));
    CHECK(back.at(1, 0) == doctest::Approx(-3.5).epsilon(1e-9));

    // round trip stays within 1e-6 on a realistic in-range spectrogram
    AudioBuffer b = sine(330.0, 0.7);
    Mat lm = spectro::log_mel(spectro::magnitude(spectro::stft(b)));
    double lo = 1e300, hi = -1e300;
    for (double v : lm.v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    spectro::NormalizationStats st2{lo, hi};
    Mat rt = spectro::denormalize(spectro::normalize(lm, st2), st2);
    for (size_t i = 0; i < lm.size(); ++i) {
        CHECK(std::abs(rt.v[i] - lm.v[i]) < 1e-6);
    }

    spectro::NormalizationStats flat{2.0, 2.0};
    Mat z = spectro::normalize(m, flat, &degenerate);
    CHECK(degenerate);
    for (double v : z.v) CHECK(v == 0.0);
}

TEST_CASE("slice_frames: sequential layout and padding") {
    Mat m(128, 1001);
    for (int r = 0; r < m.rows; ++r) {
        for (int c = 0; c < m.cols; ++c) m.at(r, c) = std::sin(0.01 * r * c);
    }
    auto slices = spectro::slice_sequential(m);
    REQUIRE(slices.size() == 8);
    CHECK(slices.back().pad_frames == 23);
    for (size_t i = 0; i + 1 < slices.size(); ++i) CHECK(slices[i].pad_frames == 0);

    // concatenation minus pad reconstructs the input
    for (int c = 0; c < m.cols; ++c) {
        const auto& s = slices[c / 128];
        for (int r = 0; r < 128; ++r) {
            CHECK(s.values.at(r, c % 128) == m.at(r, c));
        }
    }
    // pad region is normalized silence
    for (int r = 0; r < 128; ++r) {
        for (int c = 128 - 23; c < 128; ++c) CHECK(slices.back().values.at(r, c) == -1.0);
    }

    Mat exact(128, 128);
    for (size_t i = 0; i < exact.size(); ++i) exact.v[i] = 0.25;
    auto one = spectro::slice_sequential(exact);
    REQUIRE(one.size() == 1);
    CHECK(one[0].pad_frames == 0);
    for (size_t i = 0; i < exact.size(); ++i) CHECK(one[0].values.v[i] == 0.25);
}

TEST_CASE("slice_frames: random crop deterministic under seed") {
    Mat m(128, 700);
    for (size_t i = 0; i < m.size(); ++i) m.v[i] = static_cast<double>(i % 17) / 17.0;
    auto a = spectro::slice_random_crop(m, 42);
    auto b = spectro::slice_random_crop(m, 42);
    CHECK(a.origin_frame == b.origin_frame);
    CHECK(a.values.v == b.values.v);
    auto c = spectro::slice_random_crop(m, 43);
    // different seed is allowed to coincide, but the offset must stay in range
    CHECK(c.origin_frame >= 0);
    CHECK(c.origin_frame <= 700 - 128);
}

TEST_CASE("invert_to_waveform: silence floor, length, round trip") {
    Mat floor_spec(128, 101);
    for (auto& v : floor_spec.v) v = std::log(1e-5);
    AudioBuffer quiet = spectro::invert_to_waveform(floor_spec);
    CHECK(quiet.samples.size() == 101 * 160);
    float peak = 0;
    for (float s : quiet.samples) peak = std::max(peak, std::abs(s));
    CHECK(peak < 1e-2f);

    // 440 Hz round trip: dominant frequency within 3%
    AudioBuffer b = sine(440.0, 1.0);
    Mat lm = spectro::log_mel(spectro::magnitude(spectro::stft(b)));
    AudioBuffer rec = spectro::invert_to_waveform(lm, 32);
    auto mag = spectro::magnitude(spectro::stft(rec));
    // average spectrum over interior frames, parabolic peak
    std::vector<double> avg(static_cast<size_t>(mag.rows), 0.0);
    for (int k = 0; k < mag.rows; ++k) {
        for (int f = 5; f < mag.cols - 5; ++f) avg[k] += mag.at(k, f);
    }
    int arg = 1;
    for (int k = 2; k < mag.rows - 1; ++k) {
        if (avg[k] > avg[arg]) arg = k;
    }
    double l = std::log(std::max(avg[arg - 1], 1e-12)), c0 = std::log(avg[arg]),
           r = std::log(std::max(avg[arg + 1], 1e-12));
    double delta = 0.5 * (l - r) / (l - 2 * c0 + r);
    double freq = (arg + delta) * 16000.0 / 320.0;
    CHECK(freq == doctest::Approx(440.0).epsilon(0.03));
}

TEST_CASE("spectrogram file io round trip") {
    Mat m(128, 64);
    for (size_t i = 0; i < m.size(); ++i) m.v[i] = std::sin(0.37 * static_cast<double>(i));
    spectro::NormalizationStats st{-10.0, 3.0};
    const auto path = (temp_dir() / "spec.spec").string();
    spectro::save_spectrogram(path, m, st);
    spectro::NormalizationStats st2;
    Mat back = spectro::load_spectrogram(path, &st2);
    CHECK(back.rows == 128);
    CHECK(back.cols == 64);
    CHECK(st2.lo == st.lo);
    CHECK(st2.hi == st.hi);
    for (size_t i = 0; i < m.size(); ++i) {
        CHECK(back.v[i] == doctest::Approx(m.v[i]).epsilon(1e-6));
    }

    // header is one JSON line
    std::ifstream f(path, std::ios::binary);
    std::string line;
    std::getline(f, line);
    CHECK(line.find("\"bins\":128") != std::string::npos);
    CHECK(line.find("\"frames\":64") != std::string::npos);
}

TEST_CASE("pipeline purity: identical inputs give bit-identical outputs") {
    AudioBuffer b = sine(660.0, 0.5);
    auto m1 = spectro::log_mel(spectro::magnitude(spectro::stft(b)));
    auto m2 = spectro::log_mel(spectro::magnitude(spectro::stft(b)));
    CHECK(m1.v == m2.v);
}

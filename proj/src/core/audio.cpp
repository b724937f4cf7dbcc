#include "core/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "core/error.hpp"

namespace dt::audio {

namespace {

uint32_t read_u32(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16(const uint8_t* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

} // namespace

AudioBuffer decode_wav(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(Err::io, "cannot open audio file: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        fail(Err::format, "not a RIFF/WAVE file: " + path);
    }

    int channels = 0, rate = 0, bits = 0, fmt_tag = 0;
    const uint8_t* data = nullptr;
    size_t data_len = 0;

    size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const uint8_t* hdr = bytes.data() + pos;
        uint32_t chunk_len = read_u32(hdr + 4);
        const uint8_t* body = hdr + 8;
        if (pos + 8 + chunk_len > bytes.size()) chunk_len = static_cast<uint32_t>(bytes.size() - pos - 8);
        if (std::memcmp(hdr, "fmt ", 4) == 0 && chunk_len >= 16) {
            fmt_tag = read_u16(body);
            channels = read_u16(body + 2);
            rate = static_cast<int>(read_u32(body + 4));
            bits = read_u16(body + 14);
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            data = body;
            data_len = chunk_len;
        }
        pos += 8 + chunk_len + (chunk_len & 1);
    }

    if (!data || channels <= 0 || rate <= 0) fail(Err::format, "missing fmt/data chunk: " + path);
    // 0xFFFE = WAVE_FORMAT_EXTENSIBLE; the low bits-per-sample field still applies.
    if (fmt_tag != 1 && fmt_tag != 3 && fmt_tag != 0xFFFE) {
        fail(Err::format, "unsupported WAV format tag " + std::to_string(fmt_tag) + ": " + path);
    }

    size_t bytes_per_sample = static_cast<size_t>(bits) / 8;
    if (!(bits == 16 || bits == 24 || bits == 32)) {
        fail(Err::format, "unsupported bit depth " + std::to_string(bits) + ": " + path);
    }
    size_t frame_bytes = bytes_per_sample * static_cast<size_t>(channels);
    size_t n_frames = frame_bytes ? data_len / frame_bytes : 0;
    if (n_frames == 0) fail(Err::invalid, "empty audio: " + path);

    AudioBuffer out;
    out.sample_rate = rate;
    out.samples.resize(n_frames);
    for (size_t i = 0; i < n_frames; ++i) {
        double acc = 0.0;
        for (int ch = 0; ch < channels; ++ch) {
            const uint8_t* s = data + i * frame_bytes + ch * bytes_per_sample;
            double v = 0.0;
            if (bits == 16) {
                int16_t x;
                std::memcpy(&x, s, 2);
                v = x / 32768.0;
            } else if (bits == 24) {
                int32_t x = (s[0] << 8) | (s[1] << 16) | (static_cast<int32_t>(static_cast<int8_t>(s[2])) << 24);
                v = (x >> 8) / 8388608.0;
            } else { // 32-bit
                if (fmt_tag == 3) {
                    float x;
                    std::memcpy(&x, s, 4);
                    v = x;
                } else {
                    int32_t x;
                    std::memcpy(&x, s, 4);
                    v = x / 2147483648.0;
                }
            }
            acc += v;
        }
        out.samples[i] = static_cast<float>(acc / channels);
    }
    return out;
}

AudioBuffer load_audio(const std::string& path) {
    AudioBuffer buf = decode_wav(path);
    if (buf.sample_rate != kSampleRate) {
        buf.samples = resample(buf.samples, buf.sample_rate, kSampleRate);
        buf.sample_rate = kSampleRate;
    }
    if (buf.samples.empty()) fail(Err::invalid, "empty audio after resampling: " + path);
    float peak = 0.0f;
    for (float s : buf.samples) peak = std::max(peak, std::abs(s));
    if (peak > 0.0f) {
        float g = 1.0f / peak;
        for (float& s : buf.samples) s *= g;
    }
    return buf;
}

void write_wav(const std::string& path, const AudioBuffer& buf) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(Err::io, "cannot write audio file: " + path);
    uint32_t n = static_cast<uint32_t>(buf.samples.size());
    uint32_t data_len = n * 2;
    uint32_t rate = static_cast<uint32_t>(buf.sample_rate);
    uint32_t byte_rate = rate * 2;

    auto put_u32 = [&](uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
    auto put_u16 = [&](uint16_t v) { f.write(reinterpret_cast<const char*>(&v), 2); };

    f.write("RIFF", 4);
    put_u32(36 + data_len);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    put_u32(16);
    put_u16(1); // PCM
    put_u16(1); // mono
    put_u32(rate);
    put_u32(byte_rate);
    put_u16(2);  // block align
    put_u16(16); // bits
    f.write("data", 4);
    put_u32(data_len);
    for (float s : buf.samples) {
        float c = std::clamp(s, -1.0f, 1.0f);
        int16_t q = static_cast<int16_t>(std::lrint(c * 32767.0f));
        f.write(reinterpret_cast<const char*>(&q), 2);
    }
    if (!f) fail(Err::io, "short write: " + path);
}

std::vector<float> resample(const std::vector<float>& in, int from_hz, int to_hz) {
    if (from_hz == to_hz || in.empty()) return in;
    const double ratio = static_cast<double>(from_hz) / to_hz;
    const double cutoff = 0.45 * std::min(from_hz, to_hz) / from_hz; // cycles per input sample
    const int half_taps = 24;
    const size_t n_out = static_cast<size_t>(std::floor(in.size() / ratio));
    std::vector<float> out(n_out);
    const double pi = 3.14159265358979323846;
    for (size_t i = 0; i < n_out; ++i) {
        double center = i * ratio;
        int k0 = static_cast<int>(std::floor(center)) - half_taps + 1;
        int k1 = static_cast<int>(std::floor(center)) + half_taps;
        double acc = 0.0, wsum = 0.0;
        for (int k = k0; k <= k1; ++k) {
            double d = (k - center);
            double sinc = (std::abs(d) < 1e-12) ? 1.0 : std::sin(2.0 * pi * cutoff * d) / (2.0 * pi * cutoff * d);
            double win = 0.5 + 0.5 * std::cos(pi * d / half_taps); // Hann over the tap span
            double w = sinc * win;
            wsum += w;
            if (k >= 0 && k < static_cast<int>(in.size())) acc += w * in[k];
        }
        // normalizing by the realized tap sum keeps unity DC gain at the edges too
        out[i] = static_cast<float>(acc / (wsum > 1e-9 ? wsum : 1.0));
    }
    return out;
}

} // namespace dt::audio

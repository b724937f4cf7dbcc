#pragma once

#include <string>
#include <vector>

namespace dt {

// Mono waveform. After load_audio: 16 kHz, peak-normalized unless all-zero.
struct AudioBuffer {
    std::vector<float> samples;
    int sample_rate = 16000;

    double duration_s() const {
        return static_cast<double>(samples.size()) / sample_rate;
    }
};

namespace audio {

constexpr int kSampleRate = 16000;

// Decode a PCM WAV (16/24-bit int or 32-bit float, any rate/channels),
// mix down to mono, resample to 16 kHz, peak-normalize to 1 unless all-zero.
AudioBuffer load_audio(const std::string& path);

// Raw decode without resampling or normalization (channels mixed to mono).
AudioBuffer decode_wav(const std::string& path);

// 16-bit PCM mono writer.
void write_wav(const std::string& path, const AudioBuffer& buf);

// Windowed-sinc rate conversion.
std::vector<float> resample(const std::vector<float>& in, int from_hz, int to_hz);

} // namespace audio
} // namespace dt

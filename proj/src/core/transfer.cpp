#include "core/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "core/bridge.hpp"
#include "core/error.hpp"
#include "core/sampler.hpp"

namespace dt::transfer {

namespace fs = std::filesystem;

TrackResult transfer_track(const AudioBuffer& input, Denoiser& model, const TransferOptions& opt) {
    if (opt.steps < 1) fail(Err::config, "transfer: steps must be >= 1");
    if (static_cast<int>(input.samples.size()) < spectro::kHop) {
        fail(Err::invalid, "transfer: input shorter than one hop");
    }
    if (!(model.stats.lo < model.stats.hi)) {
        fail(Err::format, "transfer: checkpoint normalization stats missing or degenerate");
    }

    const Mat cond = spectro::log_mel(spectro::magnitude(spectro::stft(input)));
    const int frames = cond.cols;
    const Mat cond_norm = spectro::normalize(cond, model.stats);
    const auto slices = spectro::slice_sequential(cond_norm);
    const int n_slices = static_cast<int>(slices.size());

    // one noise tensor for the whole track, reused by every slice
    nn::Tensor<float> noise(1, 1, spectro::kMelBins, spectro::kSliceFrames);
    {
        Rng rng(opt.seed);
        for (auto& v : noise.data) v = static_cast<float>(rng.normal());
    }

    // Slices run as one batch; layers process batch items independently, so
    // this is bit-identical to a sequential loop over slices.
    nn::Tensor<float> x_cond(n_slices, 1, spectro::kMelBins, spectro::kSliceFrames);
    nn::Tensor<float> noise_b(n_slices, 1, spectro::kMelBins, spectro::kSliceFrames);
    for (int s = 0; s < n_slices; ++s) {
        float* xd = x_cond.ptr(s, 0);
        for (size_t j = 0; j < slices[s].values.size(); ++j) {
            xd[j] = static_cast<float>(slices[s].values.v[j]);
        }
        std::copy(noise.data.begin(), noise.data.end(), noise_b.ptr(s, 0));
    }

    sampler::SamplerConfig scfg;
    scfg.steps = opt.steps;
    scfg.sched = model.schedule_config();
    auto predict = [&](const nn::Tensor<float>& yt, const nn::Tensor<float>& x, double t) {
        return model.predict_noise(yt, x, std::vector<double>(static_cast<size_t>(yt.n), t));
    };
    nn::Tensor<float> gen = sampler::sample(predict, x_cond, noise_b, scfg);

    // clip to the normalized range, stitch, trim the final slice padding
    Mat stitched(spectro::kMelBins, frames);
    for (int s = 0; s < n_slices; ++s) {
        const int base = s * spectro::kSliceFrames;
        const int take = std::min(spectro::kSliceFrames, frames - base);
        const float* src = gen.ptr(s, 0);
        for (int r = 0; r < spectro::kMelBins; ++r) {
            for (int c = 0; c < take; ++c) {
                double v = src[r * spectro::kSliceFrames + c];
                stitched.at(r, base + c) = std::clamp(v, -1.0, 1.0);
            }
        }
    }

    TrackResult out;
    out.generated_logmel = spectro::denormalize(stitched, model.stats);
    out.audio = spectro::invert_to_waveform(out.generated_logmel, opt.griffin_lim_iters);
    return out;
}

CorpusResult transfer_corpus(const std::string& dir_in, Denoiser& model,
                             const std::string& dir_out, const TransferOptions& opt) {
    if (!fs::is_directory(dir_in)) fail(Err::io, "input directory not found: " + dir_in);
    fs::create_directories(dir_out);
    std::vector<fs::path> inputs;
    for (const auto& e : fs::directory_iterator(dir_in)) {
        if (e.is_regular_file() && e.path().extension() == ".wav") inputs.push_back(e.path());
    }
    std::sort(inputs.begin(), inputs.end());

    CorpusResult res;
    for (const auto& in : inputs) {
        try {
            AudioBuffer buf = audio::load_audio(in.string());
            TrackResult tr = transfer_track(buf, model, opt);
            const auto out_wav = fs::path(dir_out) / in.filename();
            audio::write_wav(out_wav.string(), tr.audio);
            if (opt.dump_spectrograms) {
                auto spec_path = fs::path(dir_out) / (in.stem().string() + ".spec");
                spectro::save_spectrogram(spec_path.string(), tr.generated_logmel, model.stats);
            }
            ++res.n_ok;
        } catch (const Error& e) {
            res.failed.push_back(in.filename().string() + ": " + e.what());
        }
    }
    return res;
}

} // namespace dt::transfer

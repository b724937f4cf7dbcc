#include "core/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "core/bridge.hpp"
#include "core/error.hpp"

#include <json.hpp>

namespace dt::trainer {

namespace fs = std::filesystem;

PreparedCorpus prepare_corpus(const std::vector<toydata::PairPaths>& pairs) {
    if (pairs.empty()) fail(Err::dataset, "training corpus is empty");
    PreparedCorpus out;
    std::vector<Mat> x_raw, y_raw;
    double lo = 1e300, hi = -1e300;
    for (const auto& p : pairs) {
        Mat x = spectro::log_mel(spectro::magnitude(spectro::stft(audio::load_audio(p.x_path))));
        Mat y = spectro::log_mel(spectro::magnitude(spectro::stft(audio::load_audio(p.y_path))));
        for (double v : x.v) { lo = std::min(lo, v); hi = std::max(hi, v); }
        for (double v : y.v) { lo = std::min(lo, v); hi = std::max(hi, v); }
        x_raw.push_back(std::move(x));
        y_raw.push_back(std::move(y));
    }
    out.stats = {lo, hi};
    for (size_t i = 0; i < pairs.size(); ++i) {
        out.tracks.push_back({pairs[i].name, spectro::normalize(x_raw[i], out.stats),
                              spectro::normalize(y_raw[i], out.stats)});
    }
    return out;
}

std::vector<Batch> make_epoch_batches(const PreparedCorpus& corpus, const TrainConfig& cfg,
                                      Rng& rng) {
    const int n_tracks = static_cast<int>(corpus.tracks.size());
    const int samples = n_tracks * cfg.crops_per_track_per_epoch;
    std::vector<int> order(static_cast<size_t>(samples));
    for (int i = 0; i < samples; ++i) order[i] = i % n_tracks;
    for (int i = samples - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);

    std::vector<Batch> batches;
    for (int start = 0; start < samples; start += cfg.batch_size) {
        const int b = std::min(cfg.batch_size, samples - start);
        Batch batch{nn::Tensor<float>(b, 1, spectro::kMelBins, spectro::kSliceFrames),
                    nn::Tensor<float>(b, 1, spectro::kMelBins, spectro::kSliceFrames)};
        for (int i = 0; i < b; ++i) {
            const auto& tr = corpus.tracks[order[start + i]];
            const int max_off = std::max(0, tr.x_norm.cols - spectro::kSliceFrames);
            const int off = rng.uniform_int(0, max_off); // same offset for x and y
            auto sx = spectro::slice_at(tr.x_norm, off);
            auto sy = spectro::slice_at(tr.y_norm, off);
            float* xd = batch.x.ptr(i, 0);
            float* yd = batch.y.ptr(i, 0);
            for (size_t j = 0; j < sx.values.size(); ++j) {
                xd[j] = static_cast<float>(sx.values.v[j]);
                yd[j] = static_cast<float>(sy.values.v[j]);
            }
        }
        batches.push_back(std::move(batch));
    }
    return batches;
}

double train_step(Denoiser& model, nn::AdamW<float>& opt, const nn::Tensor<float>& x_cond,
                  const nn::Tensor<float>& y0, Rng& rng) {
    if (!x_cond.same_shape(y0)) fail(Err::invalid, "train_step: x/y shape mismatch");
    const int b = y0.n;
    auto& net = model.net();

    std::vector<double> ts = schedule::sample_diffusion_times(b, rng);
    nn::Tensor<float> eps(y0.n, y0.c, y0.h, y0.w);
    for (auto& v : eps.data) v = static_cast<float>(rng.normal());

    nn::Tensor<float> yt(y0.n, y0.c, y0.h, y0.w);
    std::vector<double> noise_var(static_cast<size_t>(b));
    const int plane = y0.plane();
    for (int ni = 0; ni < b; ++ni) {
        auto r = schedule::cosine_rates(ts[ni], model.schedule_config());
        noise_var[ni] = r.noise_rate * r.noise_rate;
        schedule::forward_noise(y0.ptr(ni, 0), eps.ptr(ni, 0), static_cast<size_t>(plane), r,
                                yt.ptr(ni, 0));
    }

    nn::Tape<float> tape;
    nn::Tensor<float> eps_hat = net.forward(yt, x_cond, noise_var, &tape);
    nn::Tensor<float> grad;
    double loss = nn::l1_loss(eps_hat, eps, &grad);
    if (!std::isfinite(loss)) {
        fail(Err::numeric, "train_step: non-finite loss " + std::to_string(loss) +
                               " (step " + std::to_string(opt.steps_taken() + 1) + ")");
    }
    net.zero_grads();
    net.backward(grad, tape);
    auto params = net.params();
    opt.step(params);
    return loss;
}

FitResult fit(const PreparedCorpus& corpus, const TrainConfig& cfg, const nn::UNetConfig& ucfg,
              const schedule::ScheduleConfig& scfg, const std::string& out_dir,
              const EpochCallback& on_epoch) {
    if (corpus.tracks.empty()) fail(Err::dataset, "fit: empty corpus");
    if (cfg.epochs < 1 || cfg.batch_size < 1 || cfg.crops_per_track_per_epoch < 1 ||
        cfg.learning_rate <= 0.0 || cfg.weight_decay < 0.0) {
        fail(Err::config, "fit: non-positive training parameter");
    }
    fs::create_directories(out_dir);
    std::ofstream log(fs::path(out_dir) / "train_log.jsonl");
    if (!log) fail(Err::io, "cannot write train log under " + out_dir);

    Denoiser model(ucfg, scfg, cfg.seed);
    model.stats = corpus.stats;
    model.net().alloc_grads();
    nn::AdamW<float> opt(cfg.learning_rate, cfg.weight_decay);
    Rng rng(cfg.seed);

    FitResult result;
    std::vector<nn::Tensor<float>> best_state;
    auto snapshot = [&]() {
        best_state.clear();
        for (auto& p : model.net().params()) best_state.push_back(*p.value);
        for (auto& b : model.net().buffers()) best_state.push_back(*b.value);
    };
    auto restore = [&]() {
        size_t i = 0;
        for (auto& p : model.net().params()) *p.value = best_state[i++];
        for (auto& b : model.net().buffers()) *b.value = best_state[i++];
    };

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        double loss_sum = 0.0;
        int n_batches = 0;
        for (auto& batch : make_epoch_batches(corpus, cfg, rng)) {
            loss_sum += train_step(model, opt, batch.x, batch.y, rng);
            ++n_batches;
        }
        const double mean_loss = loss_sum / n_batches;
        const double wall_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.epoch_losses.push_back(mean_loss);
        if (result.best_epoch == 0 || mean_loss < result.best_loss) {
            result.best_epoch = epoch;
            result.best_loss = mean_loss;
            snapshot();
        }
        log << nlohmann::json{{"epoch", epoch}, {"mean_loss", mean_loss}, {"wall_s", wall_s}}
                   .dump()
            << "\n";
        log.flush();
        if (on_epoch) on_epoch(epoch, mean_loss, wall_s);
    }

    restore();
    model.meta = {result.best_epoch, result.best_loss, cfg.seed};
    model.save(out_dir);
    return result;
}

} // namespace dt::trainer

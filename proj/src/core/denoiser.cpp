#include "core/denoiser.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "core/error.hpp"

#include <json.hpp>

namespace dt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr uint32_t kWeightsMagic = 0x31575444; // "DTW1"

void write_weights(const std::string& path, std::vector<nn::ParamRef<float>> tensors) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(Err::io, "cannot write weights: " + path);
    auto put_u32 = [&](uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
    put_u32(kWeightsMagic);
    put_u32(static_cast<uint32_t>(tensors.size()));
    for (auto& t : tensors) {
        put_u32(static_cast<uint32_t>(t.name.size()));
        f.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        put_u32(static_cast<uint32_t>(t.value->n));
        put_u32(static_cast<uint32_t>(t.value->c));
        put_u32(static_cast<uint32_t>(t.value->h));
        put_u32(static_cast<uint32_t>(t.value->w));
        f.write(reinterpret_cast<const char*>(t.value->data.data()),
                static_cast<std::streamsize>(t.value->size() * sizeof(float)));
    }
    if (!f) fail(Err::io, "short write: " + path);
}

void read_weights(const std::string& path, std::vector<nn::ParamRef<float>> tensors) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(Err::io, "cannot open weights: " + path);
    auto get_u32 = [&]() {
        uint32_t v = 0;
        f.read(reinterpret_cast<char*>(&v), 4);
        return v;
    };
    if (get_u32() != kWeightsMagic) fail(Err::format, "bad weights magic: " + path);
    uint32_t count = get_u32();
    if (count != tensors.size()) {
        fail(Err::format, "weights tensor count mismatch (" + std::to_string(count) + " vs " +
                              std::to_string(tensors.size()) + "): " + path);
    }
    for (auto& t : tensors) {
        uint32_t name_len = get_u32();
        std::string name(name_len, '\0');
        f.read(name.data(), name_len);
        if (name != t.name) fail(Err::format, "weights order mismatch at '" + name + "': " + path);
        int dims[4];
        for (int& d : dims) d = static_cast<int>(get_u32());
        if (dims[0] != t.value->n || dims[1] != t.value->c || dims[2] != t.value->h ||
            dims[3] != t.value->w) {
            fail(Err::format, "weights shape mismatch at '" + name + "': " + path);
        }
        f.read(reinterpret_cast<char*>(t.value->data.data()),
               static_cast<std::streamsize>(t.value->size() * sizeof(float)));
        if (!f) fail(Err::format, "truncated weights at '" + name + "': " + path);
    }
}

json unet_to_json(const nn::UNetConfig& c) {
    return json{{"stage_filters", c.stage_filters},
                {"blocks_per_stage", c.blocks_per_stage},
                {"bottleneck_filters", c.bottleneck_filters},
                {"pool_size", c.pool_size},
                {"kernel", c.kernel},
                {"residual_kernel", c.residual_kernel},
                {"time_embed_dims", c.time_embed_dims}};
}

nn::UNetConfig unet_from_json(const json& j) {
    nn::UNetConfig c;
    c.stage_filters = j.at("stage_filters").get<std::vector<int>>();
    c.blocks_per_stage = j.at("blocks_per_stage").get<int>();
    c.bottleneck_filters = j.at("bottleneck_filters").get<int>();
    c.pool_size = j.at("pool_size").get<int>();
    c.kernel = j.at("kernel").get<int>();
    c.residual_kernel = j.at("residual_kernel").get<int>();
    c.time_embed_dims = j.at("time_embed_dims").get<int>();
    return c;
}

} // namespace

Denoiser::Denoiser(const nn::UNetConfig& ucfg, const schedule::ScheduleConfig& scfg,
                   uint64_t init_seed)
    : ucfg_(ucfg), scfg_(scfg), net_(std::make_unique<nn::UNet<float>>(ucfg, init_seed)) {}

nn::Tensor<float> Denoiser::predict_noise(const nn::Tensor<float>& yt,
                                          const nn::Tensor<float>& cond,
                                          const std::vector<double>& t) {
    std::vector<double> noise_var(t.size());
    for (size_t i = 0; i < t.size(); ++i) {
        auto r = schedule::cosine_rates(t[i], scfg_);
        noise_var[i] = r.noise_rate * r.noise_rate;
    }
    return net_->forward(yt, cond, noise_var, nullptr);
}

void Denoiser::save(const std::string& dir) {
    fs::create_directories(dir);
    auto tensors = net_->params();
    for (auto& b : net_->buffers()) tensors.push_back(b);
    write_weights((fs::path(dir) / "weights.bin").string(), std::move(tensors));

    json manifest{
        {"schema_version", 1},
        {"unet", unet_to_json(ucfg_)},
        {"schedule",
         {{"max_signal_rate", scfg_.max_signal_rate}, {"min_signal_rate", scfg_.min_signal_rate}}},
        {"normalization", {{"lo", stats.lo}, {"hi", stats.hi}}},
        {"training_meta", {{"epoch", meta.epoch}, {"loss", meta.loss}, {"seed", meta.seed}}},
        {"spectrogram",
         {{"sample_rate", audio::kSampleRate},
          {"window", spectro::kWindow},
          {"hop", spectro::kHop},
          {"mel_bins", spectro::kMelBins},
          {"f_min", spectro::kFMin},
          {"f_max", spectro::kFMax},
          {"floor_eps", spectro::kFloorEps}}}};
    std::ofstream f(fs::path(dir) / "manifest.json");
    if (!f) fail(Err::io, "cannot write manifest: " + dir);
    f << manifest.dump(2) << "\n";
}

std::string Denoiser::manifest_json(const std::string& dir) {
    std::ifstream f(fs::path(dir) / "manifest.json");
    if (!f) fail(Err::io, "cannot open checkpoint manifest: " + dir);
    std::string s((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return s;
}

Denoiser Denoiser::load(const std::string& dir) {
    json manifest = json::parse(manifest_json(dir), nullptr, false);
    if (manifest.is_discarded()) fail(Err::format, "malformed manifest.json: " + dir);
    try {
        nn::UNetConfig ucfg = unet_from_json(manifest.at("unet"));
        schedule::ScheduleConfig scfg;
        scfg.max_signal_rate = manifest.at("schedule").at("max_signal_rate").get<double>();
        scfg.min_signal_rate = manifest.at("schedule").at("min_signal_rate").get<double>();
        Denoiser d(ucfg, scfg, /*init_seed=*/0);
        d.stats.lo = manifest.at("normalization").at("lo").get<double>();
        d.stats.hi = manifest.at("normalization").at("hi").get<double>();
        d.meta.epoch = manifest.at("training_meta").at("epoch").get<int>();
        d.meta.loss = manifest.at("training_meta").at("loss").get<double>();
        d.meta.seed = manifest.at("training_meta").at("seed").get<uint64_t>();
        auto tensors = d.net_->params();
        for (auto& b : d.net_->buffers()) tensors.push_back(b);
        read_weights((fs::path(dir) / "weights.bin").string(), std::move(tensors));
        return d;
    } catch (const json::exception& e) {
        fail(Err::format, "incomplete checkpoint manifest (" + std::string(e.what()) + "): " + dir);
    }
}

} // namespace dt

#include "core/metrics.hpp"

#include <cblas.h>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

#include "core/error.hpp"
#include "core/spectro.hpp"

#include <json.hpp>

namespace dt::metrics {

namespace fs = std::filesystem;

namespace {

constexpr int kWindowFrames = 100; // 1 s at 10 ms hop

// mel filter center frequencies in Hz, for the centroid
const std::vector<double>& band_centers() {
    static const std::vector<double> c = [] {
        std::vector<double> v(spectro::kMelBins);
        const double mel_lo = spectro::hz_to_mel(spectro::kFMin);
        const double mel_hi = spectro::hz_to_mel(spectro::kFMax);
        for (int b = 0; b < spectro::kMelBins; ++b) {
            v[b] = spectro::mel_to_hz(mel_lo + (mel_hi - mel_lo) * (b + 1) / (spectro::kMelBins + 1));
        }
        return v;
    }();
    return c;
}

// symmetric PSD square root in place; negative eigenvalues clipped at 0
Mat sqrtm_psd(Mat m) {
    const int d = m.rows;
    std::vector<double> eig(static_cast<size_t>(d));
    int info = LAPACKE_dsyevd(LAPACK_ROW_MAJOR, 'V', 'U', d, m.v.data(), d, eig.data());
    if (info != 0) fail(Err::numeric, "eigendecomposition failed (info " + std::to_string(info) + ")");
    // columns of m now hold eigenvectors; out = V sqrt(L) V^T
    Mat out(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
            double acc = 0.0;
            for (int k = 0; k < d; ++k) {
                const double s = std::sqrt(std::max(eig[k], 0.0));
                acc += m.at(i, k) * s * m.at(j, k);
            }
            out.at(i, j) = acc;
            out.at(j, i) = acc;
        }
    }
    return out;
}

Mat matmul(const Mat& a, const Mat& b) {
    Mat c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        for (int k = 0; k < a.cols; ++k) {
            const double av = a.at(i, k);
            if (av == 0.0) continue;
            const double* brow = b.row(k);
            double* crow = c.row(i);
            for (int j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

std::map<std::string, std::string> list_wavs(const std::string& dir) {
    if (!fs::is_directory(dir)) fail(Err::io, "directory not found: " + dir);
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".wav") {
            out[e.path().stem().string()] = e.path().string();
        }
    }
    return out;
}

} // namespace

std::vector<Embedding> embed_specstats(const AudioBuffer& audio) {
    if (audio.samples.empty()) fail(Err::invalid, "embed: empty audio");
    const Mat lm = spectro::log_mel(spectro::magnitude(spectro::stft(audio)));
    const int f_total = lm.cols;
    const int n_win = std::max(1, f_total / kWindowFrames);
    const double log_floor = std::log(spectro::kFloorEps);
    const auto& centers = band_centers();

    std::vector<Embedding> out;
    out.reserve(static_cast<size_t>(n_win));
    for (int wi = 0; wi < n_win; ++wi) {
        const int begin = wi * kWindowFrames;
        Embedding e(2 * spectro::kMelBins + 2, 0.0);
        // short audio: a single window padded with the log floor
        auto cell = [&](int b, int f) {
            const int col = begin + f;
            return col < f_total ? lm.at(b, col) : log_floor;
        };
        for (int b = 0; b < spectro::kMelBins; ++b) {
            double mean = 0.0;
            for (int f = 0; f < kWindowFrames; ++f) mean += cell(b, f);
            mean /= kWindowFrames;
            double var = 0.0;
            for (int f = 0; f < kWindowFrames; ++f) {
                const double d = cell(b, f) - mean;
                var += d * d;
            }
            e[b] = mean;
            e[spectro::kMelBins + b] = std::sqrt(var / kWindowFrames);
        }
        // centroid over linear mel power, averaged across frames
        double centroid = 0.0;
        for (int f = 0; f < kWindowFrames; ++f) {
            double num = 0.0, den = 0.0;
            for (int b = 0; b < spectro::kMelBins; ++b) {
                const double p = std::max(std::exp(cell(b, f)) - spectro::kFloorEps, 0.0);
                num += centers[b] * p;
                den += p;
            }
            centroid += den > 1e-12 ? num / den : 0.0;
        }
        e[2 * spectro::kMelBins] = centroid / kWindowFrames;
        // flux: mean L2 of consecutive log-mel frame differences
        double flux = 0.0;
        for (int f = 1; f < kWindowFrames; ++f) {
            double acc = 0.0;
            for (int b = 0; b < spectro::kMelBins; ++b) {
                const double d = cell(b, f) - cell(b, f - 1);
                acc += d * d;
            }
            flux += std::sqrt(acc);
        }
        e[2 * spectro::kMelBins + 1] = flux / (kWindowFrames - 1);
        out.push_back(std::move(e));
    }
    return out;
}

GaussianStats gaussian_stats(const std::vector<Embedding>& embeddings) {
    const int n = static_cast<int>(embeddings.size());
    if (n < 2) fail(Err::invalid, "gaussian_stats: need at least 2 embeddings, got " + std::to_string(n));
    const int d = static_cast<int>(embeddings[0].size());
    GaussianStats st;
    st.n = n;
    st.mu.assign(static_cast<size_t>(d), 0.0);
    for (const auto& e : embeddings) {
        if (static_cast<int>(e.size()) != d) fail(Err::invalid, "gaussian_stats: ragged embeddings");
        for (int i = 0; i < d; ++i) st.mu[i] += e[i];
    }
    for (auto& m : st.mu) m /= n;
    st.sigma = Mat(d, d);
    for (const auto& e : embeddings) {
        for (int i = 0; i < d; ++i) {
            const double di = e[i] - st.mu[i];
            for (int j = i; j < d; ++j) st.sigma.at(i, j) += di * (e[j] - st.mu[j]);
        }
    }
    for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
            const double v = st.sigma.at(i, j) / (n - 1);
            st.sigma.at(i, j) = v;
            st.sigma.at(j, i) = v;
        }
    }
    return st;
}

double frechet_distance(const GaussianStats& r, const GaussianStats& g) {
    const int d = static_cast<int>(r.mu.size());
    if (d != static_cast<int>(g.mu.size())) fail(Err::invalid, "frechet_distance: dim mismatch");

    double mean_term = 0.0;
    for (int i = 0; i < d; ++i) {
        const double diff = r.mu[i] - g.mu[i];
        mean_term += diff * diff;
    }
    const Mat sr = sqrtm_psd(r.sigma);
    Mat middle = matmul(matmul(sr, g.sigma), sr);
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            const double v = 0.5 * (middle.at(i, j) + middle.at(j, i));
            middle.at(i, j) = v;
            middle.at(j, i) = v;
        }
    }
    const Mat root = sqrtm_psd(std::move(middle));
    double trace_term = 0.0;
    for (int i = 0; i < d; ++i) trace_term += r.sigma.at(i, i) + g.sigma.at(i, i) - 2.0 * root.at(i, i);
    return std::max(mean_term + trace_term, 0.0);
}

namespace {

// Pitch analysis needs finer frequency resolution than the 20 ms pipeline
// window (its 200 Hz Hann mainlobe cannot split notes a few semitones
// apart), so the extractor runs its own 64 ms transform at the same 10 ms
// hop.
constexpr int kPitchWindow = 1024;
constexpr int kPitchBins = kPitchWindow / 2 + 1;

Mat pitch_stft_magnitude(const AudioBuffer& audio) {
    const int len = static_cast<int>(audio.samples.size());
    const int frames = 1 + len / spectro::kHop;
    static const Mat dft = [] {
        // rows alternate cos/sin per bin, windowed
        Mat m(2 * kPitchBins, kPitchWindow);
        constexpr double pi = 3.14159265358979323846;
        for (int k = 0; k < kPitchBins; ++k) {
            for (int n = 0; n < kPitchWindow; ++n) {
                const double w = 0.5 - 0.5 * std::cos(2.0 * pi * n / kPitchWindow);
                const double a = 2.0 * pi * k * n / kPitchWindow;
                m.at(2 * k, n) = w * std::cos(a);
                m.at(2 * k + 1, n) = -w * std::sin(a);
            }
        }
        return m;
    }();

    const int pad = kPitchWindow / 2 - spectro::kHop / 2; // align frame centers with the 10 ms grid
    std::vector<double> padded(static_cast<size_t>(pad) + len + kPitchWindow, 0.0);
    for (int i = 0; i < len; ++i) padded[pad + i] = audio.samples[i];

    Mat framed(kPitchWindow, frames);
    for (int f = 0; f < frames; ++f) {
        const double* src = padded.data() + static_cast<size_t>(f) * spectro::kHop;
        for (int n = 0; n < kPitchWindow; ++n) framed.at(n, f) = src[n];
    }
    Mat reim(2 * kPitchBins, frames);
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, 2 * kPitchBins, frames, kPitchWindow,
                1.0, dft.v.data(), kPitchWindow, framed.v.data(), frames, 0.0, reim.v.data(),
                frames);
    Mat mag(kPitchBins, frames);
    for (int k = 0; k < kPitchBins; ++k) {
        for (int f = 0; f < frames; ++f) {
            const double re = reim.at(2 * k, f), im = reim.at(2 * k + 1, f);
            mag.at(k, f) = std::sqrt(re * re + im * im);
        }
    }
    return mag;
}

} // namespace

std::set<int> extract_pitch_set(const AudioBuffer& audio) {
    if (audio.samples.empty()) fail(Err::invalid, "extract_pitch_set: empty audio");
    const Mat mag = pitch_stft_magnitude(audio);
    const int frames = mag.cols;
    const double bin_hz = static_cast<double>(dt::audio::kSampleRate) / kPitchWindow;

    double global_max = 0.0;
    for (double v : mag.v) global_max = std::max(global_max, v);
    const double frame_gate = std::max(global_max * 1e-3, 1e-9); // skip near-silent frames

    std::map<int, int> run;   // consecutive-frame counter per midi
    std::set<int> confirmed;
    for (int f = 0; f < frames; ++f) {
        std::vector<std::pair<double, double>> peaks; // (freq, magnitude)
        double frame_max = 0.0;
        for (int k = 0; k < kPitchBins; ++k) frame_max = std::max(frame_max, mag.at(k, f));
        if (frame_max >= frame_gate) {
            const double thresh = frame_max * std::pow(10.0, -40.0 / 20.0);
            for (int k = 1; k < kPitchBins - 1; ++k) {
                const double c = mag.at(k, f);
                if (c <= mag.at(k - 1, f) || c < mag.at(k + 1, f) || c < thresh) continue;
                // parabolic interpolation on log magnitude
                const double l = std::log(std::max(mag.at(k - 1, f), 1e-12));
                const double m = std::log(std::max(c, 1e-12));
                const double rr = std::log(std::max(mag.at(k + 1, f), 1e-12));
                const double denom = l - 2.0 * m + rr;
                const double delta = std::abs(denom) > 1e-12 ? std::clamp(0.5 * (l - rr) / denom, -0.5, 0.5) : 0.0;
                peaks.emplace_back((k + delta) * bin_hz, c);
            }
        }
        std::sort(peaks.begin(), peaks.end());
        // suppress harmonic duplicates of lower kept peaks (within 50 cents)
        std::vector<double> kept;
        std::set<int> frame_midis;
        for (const auto& [freq, m] : peaks) {
            if (freq < 25.0) continue;
            bool harmonic = false;
            for (double fq : kept) {
                const int h = static_cast<int>(std::lround(freq / fq));
                if (h >= 2 && std::abs(1200.0 * std::log2(freq / (h * fq))) < 50.0) {
                    harmonic = true;
                    break;
                }
            }
            if (harmonic) continue;
            kept.push_back(freq);
            const int midi = static_cast<int>(std::lround(69.0 + 12.0 * std::log2(freq / 440.0)));
            if (midi >= 0 && midi <= 127) frame_midis.insert(midi);
        }
        // consecutive-frame persistence
        for (auto it = run.begin(); it != run.end();) {
            if (!frame_midis.count(it->first)) it = run.erase(it);
            else ++it;
        }
        for (int midi : frame_midis) {
            int& r = run[midi];
            ++r;
            if (r >= 5) confirmed.insert(midi);
        }
    }
    return confirmed;
}

double jaccard_distance(const std::set<int>& a, const std::set<int>& b) {
    if (a.empty() && b.empty()) return 0.0;
    int inter = 0;
    for (int x : a) inter += b.count(x);
    const int uni = static_cast<int>(a.size() + b.size()) - inter;
    return 1.0 - static_cast<double>(inter) / uni;
}

std::string EvalReport::to_json(int indent) const {
    nlohmann::json j{{"fad", fad},
                     {"jd_per_track", jd_per_track},
                     {"jd_mean", jd_mean},
                     {"embedding_name", embedding_name},
                     {"pitch_extractor_name", pitch_extractor_name}};
    return j.dump(indent);
}

EvalReport evaluate(const std::string& generated_dir, const std::string& reference_dir,
                    const EmbedFn& embed, const PitchFn& pitch,
                    const std::string& embedding_name, const std::string& pitch_extractor_name) {
    const EmbedFn embed_fn = embed ? embed : EmbedFn(embed_specstats);
    const PitchFn pitch_fn = pitch ? pitch : PitchFn(extract_pitch_set);

    auto gen = list_wavs(generated_dir);
    auto ref = list_wavs(reference_dir);
    std::string unmatched;
    for (const auto& [name, _] : gen)
        if (!ref.count(name)) unmatched += (unmatched.empty() ? "" : ", ") + name;
    for (const auto& [name, _] : ref)
        if (!gen.count(name)) unmatched += (unmatched.empty() ? "" : ", ") + name;
    if (!unmatched.empty()) fail(Err::dataset, "unmatched basenames: " + unmatched);
    if (gen.empty()) fail(Err::dataset, "no wav files to evaluate in " + generated_dir);

    std::vector<Embedding> gen_emb, ref_emb;
    EvalReport report;
    report.embedding_name = embedding_name;
    report.pitch_extractor_name = pitch_extractor_name;
    for (const auto& [name, gpath] : gen) {
        AudioBuffer ga = audio::load_audio(gpath);
        AudioBuffer ra = audio::load_audio(ref.at(name));
        for (auto& e : embed_fn(ga)) gen_emb.push_back(std::move(e));
        for (auto& e : embed_fn(ra)) ref_emb.push_back(std::move(e));
        report.jd_per_track.push_back(jaccard_distance(pitch_fn(ga), pitch_fn(ra)));
    }
    report.fad = frechet_distance(gaussian_stats(ref_emb), gaussian_stats(gen_emb));
    double sum = 0.0;
    for (double v : report.jd_per_track) sum += v;
    report.jd_mean = sum / report.jd_per_track.size();
    return report;
}

} // namespace dt::metrics

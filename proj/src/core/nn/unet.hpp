#pragma once

#include <string>
#include <vector>

#include "core/nn/ops.hpp"
#include "core/schedule.hpp"

namespace dt::nn {

// Architecture knobs. The defaults are the full-scale network; tests and the
// desk-scale training preset shrink them.
struct UNetConfig {
    std::vector<int> stage_filters{64, 128, 256};
    int blocks_per_stage = 4;
    int bottleneck_filters = 512;
    int pool_size = 2;
    int kernel = 3;
    int residual_kernel = 1;
    int time_embed_dims = 32;

    int input_channels() const { return 2 + time_embed_dims; }
    int downsample_factor() const {
        int f = 1;
        for (size_t i = 0; i < stage_filters.size(); ++i) f *= pool_size;
        return f;
    }
};

template <typename T>
struct ParamRef {
    std::string name;
    Tensor<T>* value = nullptr;
    Tensor<T>* grad = nullptr; // null for buffers
};

// conv3x3 -> swish -> batchnorm -> conv3x3 (linear), plus an always-present
// 1x1 projection on the residual path.
template <typename T>
struct ResidualBlock {
    Conv2d<T> conv1, conv2, res;
    BatchNorm2d<T> bn;
    Swish<T> act;

    ResidualBlock() = default;
    ResidualBlock(int in, int out, Rng& rng)
        : conv1(in, out, 3, rng), conv2(out, out, 3, rng), res(in, out, 1, rng), bn(out) {
        // the block starts as its 1x1 projection: zero main path, unit-variance
        // residual; keeps activation scale flat through deep stacks
        conv2.w.zero();
        glorot_uniform_fill(res.w, in, out, rng);
    }

    Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape) {
        Tensor<T> a = conv1.forward(x, tape);
        Tensor<T> s = act.forward(a, tape);
        Tensor<T> b = bn.forward(s, tape);
        Tensor<T> y = conv2.forward(b, tape);
        Tensor<T> r = res.forward(x, tape);
        for (size_t i = 0; i < y.size(); ++i) y.data[i] += r.data[i];
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gout, Tape<T>& tape) {
        Tensor<T> gr = res.backward(gout, tape);
        Tensor<T> g = conv2.backward(gout, tape);
        g = bn.backward(g, tape);
        g = act.backward(g, tape);
        g = conv1.backward(g, tape);
        for (size_t i = 0; i < g.size(); ++i) g.data[i] += gr.data[i];
        return g;
    }

    void alloc_grads() {
        conv1.alloc_grads();
        conv2.alloc_grads();
        res.alloc_grads();
        bn.alloc_grads();
    }

    template <typename Fn>
    void visit(const std::string& prefix, Fn&& fn) {
        fn(prefix + ".conv1.w", &conv1.w, &conv1.gw);
        fn(prefix + ".conv1.b", &conv1.b, &conv1.gb);
        fn(prefix + ".bn.gamma", &bn.gamma, &bn.ggamma);
        fn(prefix + ".bn.beta", &bn.beta, &bn.gbeta);
        fn(prefix + ".conv2.w", &conv2.w, &conv2.gw);
        fn(prefix + ".conv2.b", &conv2.b, &conv2.gb);
        fn(prefix + ".res.w", &res.w, &res.gw);
        fn(prefix + ".res.b", &res.b, &res.gb);
    }

    template <typename Fn>
    void visit_buffers(const std::string& prefix, Fn&& fn) {
        fn(prefix + ".bn.run_mean", &bn.run_mean);
        fn(prefix + ".bn.run_var", &bn.run_var);
    }
};

// Conditional noise predictor. Input assembly concatenates the noisy target,
// the conditioning slice, and the spatially broadcast sinusoidal embedding of
// the noise variance. Attention sits after the last encoder pool, after the
// bottleneck block, and after the first (deepest) decoder stage.
template <typename T>
class UNet {
public:
    UNet(const UNetConfig& cfg, uint64_t seed) : cfg_(cfg) {
        if (cfg.stage_filters.empty()) fail(Err::config, "unet: no stages");
        if (cfg.time_embed_dims < 2 || cfg.time_embed_dims % 2 != 0) {
            fail(Err::config, "unet: time_embed_dims must be even and >= 2");
        }
        Rng rng(seed);
        const int s = num_stages();
        int in = cfg.input_channels();
        for (int si = 0; si < s; ++si) {
            enc_.emplace_back();
            int f = cfg.stage_filters[si];
            for (int b = 0; b < cfg.blocks_per_stage; ++b) {
                enc_[si].emplace_back(b == 0 ? in : f, f, rng);
            }
            in = f;
        }
        attn_enc_ = SelfAttention2d<T>(cfg.stage_filters[s - 1], rng);
        bott_ = ResidualBlock<T>(cfg.stage_filters[s - 1], cfg.bottleneck_filters, rng);
        attn_bott_ = SelfAttention2d<T>(cfg.bottleneck_filters, rng);
        int prev = cfg.bottleneck_filters;
        for (int j = 0; j < s; ++j) {
            int f = cfg.stage_filters[s - 1 - j];
            dec_.emplace_back();
            dec_[j].up = TConv2d<T>(prev, f, rng);
            for (int b = 0; b < cfg.blocks_per_stage; ++b) {
                dec_[j].blocks.emplace_back(b == 0 ? 2 * f : f, f, rng);
            }
            prev = f;
        }
        attn_dec_ = SelfAttention2d<T>(cfg.stage_filters[s - 1], rng);
        final_ = Conv2d<T>(cfg.stage_filters[0], 1, 1, rng, /*gain=*/0.01);
    }

    const UNetConfig& config() const { return cfg_; }
    int num_stages() const { return static_cast<int>(cfg_.stage_filters.size()); }

    // yt, cond: [B,1,H,W]; noise_var: per-sample noise_rate^2 driving the
    // time embedding. Null tape = inference (batch-norm running stats).
    Tensor<T> forward(const Tensor<T>& yt, const Tensor<T>& cond,
                      const std::vector<double>& noise_var, Tape<T>* tape) {
        check_input(yt, cond, noise_var);
        Tensor<T> x = assemble_input(yt, cond, noise_var);
        std::vector<Tensor<T>> skips;
        for (int si = 0; si < num_stages(); ++si) {
            for (auto& b : enc_[si]) x = b.forward(x, tape);
            skips.push_back(x);
            x = pool_.forward(x);
        }
        x = attn_enc_.forward(x, tape);
        x = bott_.forward(x, tape);
        x = attn_bott_.forward(x, tape);
        for (int j = 0; j < num_stages(); ++j) {
            x = dec_[j].up.forward(x, tape);
            x = concat_channels(x, skips[num_stages() - 1 - j]);
            for (auto& b : dec_[j].blocks) x = b.forward(x, tape);
            if (j == 0) x = attn_dec_.forward(x, tape);
        }
        return final_.forward(x, tape);
    }

    void backward(const Tensor<T>& gout, Tape<T>& tape) {
        const int s = num_stages();
        Tensor<T> g = final_.backward(gout, tape);
        std::vector<Tensor<T>> dskip(static_cast<size_t>(s));
        for (int j = s - 1; j >= 0; --j) {
            int si = s - 1 - j;
            if (j == 0) g = attn_dec_.backward(g, tape);
            for (int b = cfg_.blocks_per_stage - 1; b >= 0; --b) {
                g = dec_[j].blocks[b].backward(g, tape);
            }
            int f = cfg_.stage_filters[si];
            auto [g_up, g_skip] = split_channels(g, f, f);
            dskip[si] = std::move(g_skip);
            g = dec_[j].up.backward(g_up, tape);
        }
        g = attn_bott_.backward(g, tape);
        g = bott_.backward(g, tape);
        g = attn_enc_.backward(g, tape);
        for (int si = s - 1; si >= 0; --si) {
            g = pool_.backward(g);
            for (size_t i = 0; i < g.size(); ++i) g.data[i] += dskip[si].data[i];
            for (int b = cfg_.blocks_per_stage - 1; b >= 0; --b) {
                g = enc_[si][b].backward(g, tape);
            }
        }
        // gradient w.r.t. the assembled input is discarded
    }

    void alloc_grads() {
        for (auto& st : enc_)
            for (auto& b : st) b.alloc_grads();
        attn_enc_.alloc_grads();
        bott_.alloc_grads();
        attn_bott_.alloc_grads();
        for (auto& d : dec_) {
            d.up.alloc_grads();
            for (auto& b : d.blocks) b.alloc_grads();
        }
        attn_dec_.alloc_grads();
        final_.alloc_grads();
    }

    void zero_grads() {
        for (auto& p : params())
            if (p.grad && p.grad->size()) p.grad->zero();
    }

    std::vector<ParamRef<T>> params() {
        std::vector<ParamRef<T>> out;
        visit_params([&](const std::string& name, Tensor<T>* v, Tensor<T>* g) {
            out.push_back({name, v, g});
        });
        return out;
    }

    std::vector<ParamRef<T>> buffers() {
        std::vector<ParamRef<T>> out;
        visit_buffers([&](const std::string& name, Tensor<T>* v) {
            out.push_back({name, v, nullptr});
        });
        return out;
    }

    long long param_count() {
        long long n = 0;
        for (auto& p : params()) n += static_cast<long long>(p.value->size());
        return n;
    }

private:
    struct UpStage {
        TConv2d<T> up;
        std::vector<ResidualBlock<T>> blocks;
    };

    void check_input(const Tensor<T>& yt, const Tensor<T>& cond,
                     const std::vector<double>& noise_var) const {
        if (!yt.same_shape(cond) || yt.c != 1) fail(Err::invalid, "unet: yt/cond must be [B,1,H,W]");
        if (static_cast<int>(noise_var.size()) != yt.n) {
            fail(Err::invalid, "unet: one noise variance per batch item required");
        }
        int d = cfg_.downsample_factor();
        if (yt.h % d != 0 || yt.w % d != 0) {
            fail(Err::config, "unet: spatial dims must be divisible by " + std::to_string(d));
        }
    }

    Tensor<T> assemble_input(const Tensor<T>& yt, const Tensor<T>& cond,
                             const std::vector<double>& noise_var) const {
        const int e = cfg_.time_embed_dims;
        Tensor<T> x(yt.n, 2 + e, yt.h, yt.w);
        const int plane = yt.plane();
        for (int ni = 0; ni < yt.n; ++ni) {
            std::copy(yt.ptr(ni, 0), yt.ptr(ni, 0) + plane, x.ptr(ni, 0));
            std::copy(cond.ptr(ni, 0), cond.ptr(ni, 0) + plane, x.ptr(ni, 1));
            auto emb = schedule::sinusoidal_embedding(noise_var[ni], e);
            for (int j = 0; j < e; ++j) {
                T v = static_cast<T>(emb[j]);
                T* dst = x.ptr(ni, 2 + j);
                std::fill(dst, dst + plane, v);
            }
        }
        return x;
    }

    static Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
        Tensor<T> out(a.n, a.c + b.c, a.h, a.w);
        const int plane = a.plane();
        for (int ni = 0; ni < a.n; ++ni) {
            std::copy(a.ptr(ni, 0), a.ptr(ni, 0) + static_cast<size_t>(a.c) * plane,
                      out.ptr(ni, 0));
            std::copy(b.ptr(ni, 0), b.ptr(ni, 0) + static_cast<size_t>(b.c) * plane,
                      out.ptr(ni, a.c));
        }
        return out;
    }

    static std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& g, int ca, int cb) {
        Tensor<T> a(g.n, ca, g.h, g.w), b(g.n, cb, g.h, g.w);
        const int plane = g.plane();
        for (int ni = 0; ni < g.n; ++ni) {
            std::copy(g.ptr(ni, 0), g.ptr(ni, 0) + static_cast<size_t>(ca) * plane, a.ptr(ni, 0));
            std::copy(g.ptr(ni, ca), g.ptr(ni, ca) + static_cast<size_t>(cb) * plane, b.ptr(ni, 0));
        }
        return {std::move(a), std::move(b)};
    }

    template <typename Fn>
    void visit_params(Fn&& fn) {
        for (size_t si = 0; si < enc_.size(); ++si) {
            for (size_t b = 0; b < enc_[si].size(); ++b) {
                enc_[si][b].visit("enc" + std::to_string(si) + ".b" + std::to_string(b), fn);
            }
        }
        visit_attn("attn_enc", attn_enc_, fn);
        bott_.visit("bottleneck", fn);
        visit_attn("attn_bottleneck", attn_bott_, fn);
        for (size_t j = 0; j < dec_.size(); ++j) {
            std::string p = "dec" + std::to_string(j);
            fn(p + ".up.w", &dec_[j].up.w, &dec_[j].up.gw);
            fn(p + ".up.b", &dec_[j].up.b, &dec_[j].up.gb);
            for (size_t b = 0; b < dec_[j].blocks.size(); ++b) {
                dec_[j].blocks[b].visit(p + ".b" + std::to_string(b), fn);
            }
        }
        visit_attn("attn_dec", attn_dec_, fn);
        fn("final.w", &final_.w, &final_.gw);
        fn("final.b", &final_.b, &final_.gb);
    }

    template <typename Fn>
    void visit_attn(const std::string& p, SelfAttention2d<T>& a, Fn&& fn) {
        fn(p + ".wq", &a.wq, &a.gwq);
        fn(p + ".bq", &a.bq, &a.gbq);
        fn(p + ".wk", &a.wk, &a.gwk);
        fn(p + ".bk", &a.bk, &a.gbk);
        fn(p + ".wv", &a.wv, &a.gwv);
        fn(p + ".bv", &a.bv, &a.gbv);
        fn(p + ".wo", &a.wo, &a.gwo);
        fn(p + ".bo", &a.bo, &a.gbo);
    }

    template <typename Fn>
    void visit_buffers(Fn&& fn) {
        for (size_t si = 0; si < enc_.size(); ++si) {
            for (size_t b = 0; b < enc_[si].size(); ++b) {
                enc_[si][b].visit_buffers("enc" + std::to_string(si) + ".b" + std::to_string(b), fn);
            }
        }
        bott_.visit_buffers("bottleneck", fn);
        for (size_t j = 0; j < dec_.size(); ++j) {
            for (size_t b = 0; b < dec_[j].blocks.size(); ++b) {
                dec_[j].blocks[b].visit_buffers("dec" + std::to_string(j) + ".b" + std::to_string(b),
                                                fn);
            }
        }
    }

    UNetConfig cfg_;
    std::vector<std::vector<ResidualBlock<T>>> enc_;
    SelfAttention2d<T> attn_enc_, attn_bott_, attn_dec_;
    ResidualBlock<T> bott_;
    std::vector<UpStage> dec_;
    AvgPool2<T> pool_;
    Conv2d<T> final_;
};

} // namespace dt::nn

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "core/error.hpp"
#include "core/nn/tensor.hpp"
#include "core/rng.hpp"

// Layer zoo for the denoiser. Every layer owns its parameters and gradient
// buffers; forward pushes onto the caller's tape exactly what backward pops.
// Backward must be invoked in the exact reverse of forward order.
namespace dt::nn {

template <typename T>
void he_uniform_fill(Tensor<T>& t, int fan_in, Rng& rng, double gain = 1.0) {
    double limit = gain * std::sqrt(6.0 / std::max(fan_in, 1));
    for (auto& v : t.data) v = static_cast<T>(rng.uniform(-limit, limit));
}

template <typename T>
void glorot_uniform_fill(Tensor<T>& t, int fan_in, int fan_out, Rng& rng) {
    double limit = std::sqrt(6.0 / std::max(fan_in + fan_out, 1));
    for (auto& v : t.data) v = static_cast<T>(rng.uniform(-limit, limit));
}

namespace detail {

template <typename T>
void im2col(const T* x, int ch, int height, int width, int k, int pad, T* col) {
    // col is [ch*k*k, height*width]; stride 1. Row interiors are contiguous
    // copies; only the edge pixels need the zero fill.
    const int plane = height * width;
    for (int c = 0; c < ch; ++c) {
        for (int dy = 0; dy < k; ++dy) {
            for (int dx = 0; dx < k; ++dx) {
                T* dst = col + (static_cast<size_t>(c) * k * k + dy * k + dx) * plane;
                const int shift = dx - pad;
                const int x0 = std::max(0, -shift);          // first valid xx
                const int x1 = std::min(width, width - shift); // one past last valid xx
                for (int y = 0; y < height; ++y) {
                    int sy = y + dy - pad;
                    T* drow = dst + static_cast<size_t>(y) * width;
                    if (sy < 0 || sy >= height || x0 >= x1) {
                        std::fill(drow, drow + width, T(0));
                        continue;
                    }
                    const T* srow = x + static_cast<size_t>(c) * plane + sy * width + shift;
                    std::fill(drow, drow + x0, T(0));
                    std::copy(srow + x0, srow + x1, drow + x0);
                    std::fill(drow + x1, drow + width, T(0));
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const T* col, int ch, int height, int width, int k, int pad, T* x) {
    const int plane = height * width;
    for (int c = 0; c < ch; ++c) {
        for (int dy = 0; dy < k; ++dy) {
            for (int dx = 0; dx < k; ++dx) {
                const T* src = col + (static_cast<size_t>(c) * k * k + dy * k + dx) * plane;
                const int shift = dx - pad;
                const int x0 = std::max(0, -shift);
                const int x1 = std::min(width, width - shift);
                if (x0 >= x1) continue;
                for (int y = 0; y < height; ++y) {
                    int sy = y + dy - pad;
                    if (sy < 0 || sy >= height) continue;
                    T* drow = x + static_cast<size_t>(c) * plane + sy * width + shift;
                    const T* srow = src + static_cast<size_t>(y) * width;
                    for (int xx = x0; xx < x1; ++xx) drow[xx] += srow[xx];
                }
            }
        }
    }
}

} // namespace detail

// Stride-1 "same" convolution (odd kernel), the 1x1 case skips im2col.
template <typename T>
struct Conv2d {
    int in_ch = 0, out_ch = 0, k = 1, pad = 0;
    Tensor<T> w;  // [out_ch, in_ch, k, k]
    Tensor<T> b;  // [1, out_ch, 1, 1]
    Tensor<T> gw, gb;

    Conv2d() = default;
    Conv2d(int in, int out, int k_, Rng& rng, double gain = 1.0)
        : in_ch(in), out_ch(out), k(k_), pad(k_ / 2),
          w(out, in, k_, k_), b(1, out, 1, 1) {
        he_uniform_fill(w, in * k_ * k_, rng, gain);
    }

    void alloc_grads() {
        gw = Tensor<T>(out_ch, in_ch, k, k);
        gb = Tensor<T>(1, out_ch, 1, 1);
    }

    Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape) const {
        Tensor<T> y(x.n, out_ch, x.h, x.w);
        const int plane = x.plane();
        const int kk = in_ch * k * k;
        std::vector<T> col;
        if (k > 1) col.resize(static_cast<size_t>(kk) * plane);
        for (int ni = 0; ni < x.n; ++ni) {
            const T* src = x.ptr(ni, 0);
            const T* cptr = src;
            if (k > 1) {
                detail::im2col(src, in_ch, x.h, x.w, k, pad, col.data());
                cptr = col.data();
            }
            gemm(false, false, out_ch, plane, kk, T(1), w.data.data(), kk, cptr, plane, T(0),
                 y.ptr(ni, 0), plane);
            for (int co = 0; co < out_ch; ++co) {
                T* dst = y.ptr(ni, co);
                const T bias = b.data[co];
                for (int i = 0; i < plane; ++i) dst[i] += bias;
            }
        }
        if (tape) tape->push(x);
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gout, Tape<T>& tape) {
        Tensor<T> x = tape.pop();
        Tensor<T> gin(x.n, in_ch, x.h, x.w);
        const int plane = x.plane();
        const int kk = in_ch * k * k;
        std::vector<T> col, dcol;
        if (k > 1) {
            col.resize(static_cast<size_t>(kk) * plane);
            dcol.resize(static_cast<size_t>(kk) * plane);
        }
        for (int ni = 0; ni < x.n; ++ni) {
            const T* src = x.ptr(ni, 0);
            const T* go = gout.ptr(ni, 0);
            const T* cptr = src;
            if (k > 1) {
                detail::im2col(src, in_ch, x.h, x.w, k, pad, col.data());
                cptr = col.data();
            }
            // gw += gout * col^T
            gemm(false, true, out_ch, kk, plane, T(1), go, plane, cptr, plane, T(1),
                 gw.data.data(), kk);
            for (int co = 0; co < out_ch; ++co) {
                const T* g = gout.ptr(ni, co);
                T acc = T(0);
                for (int i = 0; i < plane; ++i) acc += g[i];
                gb.data[co] += acc;
            }
            // dcol = w^T * gout, then scatter
            if (k > 1) {
                gemm(true, false, kk, plane, out_ch, T(1), w.data.data(), kk, go, plane, T(0),
                     dcol.data(), plane);
                detail::col2im_add(dcol.data(), in_ch, x.h, x.w, k, pad, gin.ptr(ni, 0));
            } else {
                gemm(true, false, kk, plane, out_ch, T(1), w.data.data(), kk, go, plane, T(0),
                     gin.ptr(ni, 0), plane);
            }
        }
        return gin;
    }
};

// Kernel-2 stride-2 transposed convolution; output blocks do not overlap.
template <typename T>
struct TConv2d {
    int in_ch = 0, out_ch = 0;
    Tensor<T> w;  // [in_ch, out_ch, 2, 2]
    Tensor<T> b;  // [1, out_ch, 1, 1]
    Tensor<T> gw, gb;

    TConv2d() = default;
    TConv2d(int in, int out, Rng& rng)
        : in_ch(in), out_ch(out), w(in, out, 2, 2), b(1, out, 1, 1) {
        he_uniform_fill(w, in, rng);
    }

    void alloc_grads() {
        gw = Tensor<T>(in_ch, out_ch, 2, 2);
        gb = Tensor<T>(1, out_ch, 1, 1);
    }

    Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape) const {
        Tensor<T> y(x.n, out_ch, x.h * 2, x.w * 2);
        const int plane_in = x.plane();
        const int oc4 = out_ch * 4;
        std::vector<T> col(static_cast<size_t>(oc4) * plane_in);
        for (int ni = 0; ni < x.n; ++ni) {
            // col[out*4, hw_in] = w^T[out*4, in] * x[in, hw_in]
            gemm(true, false, oc4, plane_in, in_ch, T(1), w.data.data(), oc4, x.ptr(ni, 0),
                 plane_in, T(0), col.data(), plane_in);
            for (int co = 0; co < out_ch; ++co) {
                const T bias = b.data[co];
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const T* src = col.data() + (static_cast<size_t>(co) * 4 + dy * 2 + dx) * plane_in;
                        for (int yy = 0; yy < x.h; ++yy) {
                            T* dst = y.ptr(ni, co) + (yy * 2 + dy) * y.w + dx;
                            const T* s = src + yy * x.w;
                            for (int xx = 0; xx < x.w; ++xx) dst[xx * 2] = s[xx] + bias;
                        }
                    }
                }
            }
        }
        if (tape) tape->push(x);
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gout, Tape<T>& tape) {
        Tensor<T> x = tape.pop();
        Tensor<T> gin(x.n, in_ch, x.h, x.w);
        const int plane_in = x.plane();
        const int oc4 = out_ch * 4;
        std::vector<T> dcol(static_cast<size_t>(oc4) * plane_in);
        for (int ni = 0; ni < x.n; ++ni) {
            for (int co = 0; co < out_ch; ++co) {
                const T* go = gout.ptr(ni, co);
                T acc = T(0);
                for (int i = 0; i < gout.plane(); ++i) acc += go[i];
                gb.data[co] += acc;
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        T* dst = dcol.data() + (static_cast<size_t>(co) * 4 + dy * 2 + dx) * plane_in;
                        for (int yy = 0; yy < x.h; ++yy) {
                            const T* srow = go + (yy * 2 + dy) * gout.w + dx;
                            for (int xx = 0; xx < x.w; ++xx) dst[yy * x.w + xx] = srow[xx * 2];
                        }
                    }
                }
            }
            // gw += x * dcol^T   -> [in, out*4]
            gemm(false, true, in_ch, oc4, plane_in, T(1), x.ptr(ni, 0), plane_in, dcol.data(),
                 plane_in, T(1), gw.data.data(), oc4);
            // gin = w * dcol     -> [in, hw_in]
            gemm(false, false, in_ch, plane_in, oc4, T(1), w.data.data(), oc4, dcol.data(),
                 plane_in, T(0), gin.ptr(ni, 0), plane_in);
        }
        return gin;
    }
};

// Batch normalization over (N, H, W) per channel. Training mode uses batch
// statistics and updates the running buffers; inference uses the buffers.
template <typename T>
struct BatchNorm2d {
    int ch = 0;
    double momentum = 0.99;
    double eps = 1e-3;
    Tensor<T> gamma, beta;        // [1, ch, 1, 1]
    Tensor<T> run_mean, run_var;  // buffers
    Tensor<T> ggamma, gbeta;

    BatchNorm2d() = default;
    explicit BatchNorm2d(int ch_) : ch(ch_), gamma(1, ch_, 1, 1), beta(1, ch_, 1, 1),
                                    run_mean(1, ch_, 1, 1), run_var(1, ch_, 1, 1) {
        for (auto& v : gamma.data) v = T(1);
        for (auto& v : run_var.data) v = T(1);
    }

    void alloc_grads() {
        ggamma = Tensor<T>(1, ch, 1, 1);
        gbeta = Tensor<T>(1, ch, 1, 1);
    }

    Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape) {
        Tensor<T> y(x.n, x.c, x.h, x.w);
        const int plane = x.plane();
        const size_t m = static_cast<size_t>(x.n) * plane;
        if (!tape) {
            for (int ci = 0; ci < ch; ++ci) {
                const T g = gamma.data[ci], bt = beta.data[ci];
                const T mu = run_mean.data[ci];
                const T inv = static_cast<T>(1.0 / std::sqrt(static_cast<double>(run_var.data[ci]) + eps));
                for (int ni = 0; ni < x.n; ++ni) {
                    const T* src = x.ptr(ni, ci);
                    T* dst = y.ptr(ni, ci);
                    for (int i = 0; i < plane; ++i) dst[i] = g * (src[i] - mu) * inv + bt;
                }
            }
            return y;
        }

        Tensor<T> xhat(x.n, x.c, x.h, x.w);
        Tensor<T> invstd(1, ch, 1, 1);
        for (int ci = 0; ci < ch; ++ci) {
            double mean = 0.0;
            for (int ni = 0; ni < x.n; ++ni) {
                const T* src = x.ptr(ni, ci);
                for (int i = 0; i < plane; ++i) mean += src[i];
            }
            mean /= static_cast<double>(m);
            double var = 0.0;
            for (int ni = 0; ni < x.n; ++ni) {
                const T* src = x.ptr(ni, ci);
                for (int i = 0; i < plane; ++i) {
                    double d = src[i] - mean;
                    var += d * d;
                }
            }
            var /= static_cast<double>(m);
            const T inv = static_cast<T>(1.0 / std::sqrt(var + eps));
            invstd.data[ci] = inv;
            const T g = gamma.data[ci], bt = beta.data[ci];
            const T mu = static_cast<T>(mean);
            for (int ni = 0; ni < x.n; ++ni) {
                const T* src = x.ptr(ni, ci);
                T* xh = xhat.ptr(ni, ci);
                T* dst = y.ptr(ni, ci);
                for (int i = 0; i < plane; ++i) {
                    xh[i] = (src[i] - mu) * inv;
                    dst[i] = g * xh[i] + bt;
                }
            }
            run_mean.data[ci] = static_cast<T>(momentum * run_mean.data[ci] + (1.0 - momentum) * mean);
            run_var.data[ci] = static_cast<T>(momentum * run_var.data[ci] + (1.0 - momentum) * var);
        }
        tape->push(xhat);
        tape->push(invstd);
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gout, Tape<T>& tape) {
        Tensor<T> invstd = tape.pop();
        Tensor<T> xhat = tape.pop();
        Tensor<T> gin(gout.n, gout.c, gout.h, gout.w);
        const int plane = gout.plane();
        const double m = static_cast<double>(gout.n) * plane;
        for (int ci = 0; ci < ch; ++ci) {
            double sum_g = 0.0, sum_gx = 0.0;
            for (int ni = 0; ni < gout.n; ++ni) {
                const T* g = gout.ptr(ni, ci);
                const T* xh = xhat.ptr(ni, ci);
                for (int i = 0; i < plane; ++i) {
                    sum_g += g[i];
                    sum_gx += static_cast<double>(g[i]) * xh[i];
                }
            }
            ggamma.data[ci] += static_cast<T>(sum_gx);
            gbeta.data[ci] += static_cast<T>(sum_g);
            const double coef = static_cast<double>(gamma.data[ci]) * invstd.data[ci] / m;
            for (int ni = 0; ni < gout.n; ++ni) {
                const T* g = gout.ptr(ni, ci);
                const T* xh = xhat.ptr(ni, ci);
                T* dst = gin.ptr(ni, ci);
                for (int i = 0; i < plane; ++i) {
                    dst[i] = static_cast<T>(coef * (m * g[i] - sum_g - xh[i] * sum_gx));
                }
            }
        }
        return gin;
    }
};

// x * sigmoid(x)
template <typename T>
struct Swish {
    Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape) const {
        Tensor<T> y(x.n, x.c, x.h, x.w);
        for (size_t i = 0; i < x.size(); ++i) {
            const T s = T(1) / (T(1) + std::exp(-x.data[i]));
            y.data[i] = x.data[i] * s;
        }
        if (tape) tape->push(x);
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gout, Tape<T>& tape) const {
        Tensor<T> x = tape.pop();
        Tensor<T> gin(x.n, x.c, x.h, x.w);
        for (size_t i = 0; i < x.size(); ++i) {
            const T s = T(1) / (T(1) + std::exp(-x.data[i]));
            gin.data[i] = gout.data[i] * s * (T(1) + x.data[i] * (T(1) - s));
        }
        return gin;
    }
};

template <typename T>
struct AvgPool2 {
    Tensor<T> forward(const Tensor<T>& x) const {
        Tensor<T> y(x.n, x.c, x.h / 2, x.w / 2);
        for (int ni = 0; ni < x.n; ++ni) {
            for (int ci = 0; ci < x.c; ++ci) {
                const T* src = x.ptr(ni, ci);
                T* dst = y.ptr(ni, ci);
                for (int yy = 0; yy < y.h; ++yy) {
                    for (int xx = 0; xx < y.w; ++xx) {
                        const T* s = src + (yy * 2) * x.w + xx * 2;
                        dst[yy * y.w + xx] = static_cast<T>(0.25) * (s[0] + s[1] + s[x.w] + s[x.w + 1]);
                    }
                }
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gout) const {
        Tensor<T> gin(gout.n, gout.c, gout.h * 2, gout.w * 2);
        for (int ni = 0; ni < gout.n; ++ni) {
            for (int ci = 0; ci < gout.c; ++ci) {
                const T* g = gout.ptr(ni, ci);
                T* dst = gin.ptr(ni, ci);
                for (int yy = 0; yy < gout.h; ++yy) {
                    for (int xx = 0; xx < gout.w; ++xx) {
                        T v = static_cast<T>(0.25) * g[yy * gout.w + xx];
                        T* d = dst + (yy * 2) * gin.w + xx * 2;
                        d[0] = d[1] = d[gin.w] = d[gin.w + 1] = v;
                    }
                }
            }
        }
        return gin;
    }
};

// Single-head scaled dot-product attention over flattened spatial positions,
// channel-preserving projections, residual add.
template <typename T>
struct SelfAttention2d {
    int ch = 0;
    Tensor<T> wq, wk, wv, wo;      // [c, c, 1, 1]
    Tensor<T> bq, bk, bv, bo;      // [1, c, 1, 1]
    Tensor<T> gwq, gwk, gwv, gwo, gbq, gbk, gbv, gbo;

    SelfAttention2d() = default;
    SelfAttention2d(int ch_, Rng& rng)
        : ch(ch_), wq(ch_, ch_, 1, 1), wk(ch_, ch_, 1, 1), wv(ch_, ch_, 1, 1), wo(ch_, ch_, 1, 1),
          bq(1, ch_, 1, 1), bk(1, ch_, 1, 1), bv(1, ch_, 1, 1), bo(1, ch_, 1, 1) {
        glorot_uniform_fill(wq, ch_, ch_, rng);
        glorot_uniform_fill(wk, ch_, ch_, rng);
        glorot_uniform_fill(wv, ch_, ch_, rng);
        // zero output projection: the layer starts as the identity map
    }

    void alloc_grads() {
        gwq = Tensor<T>(ch, ch, 1, 1);
        gwk = Tensor<T>(ch, ch, 1, 1);
        gwv = Tensor<T>(ch, ch, 1, 1);
        gwo = Tensor<T>(ch, ch, 1, 1);
        gbq = Tensor<T>(1, ch, 1, 1);
        gbk = Tensor<T>(1, ch, 1, 1);
        gbv = Tensor<T>(1, ch, 1, 1);
        gbo = Tensor<T>(1, ch, 1, 1);
    }

    Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape) const {
        const int hw = x.plane();
        const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(ch)));
        Tensor<T> q(x.n, ch, x.h, x.w), kk(x.n, ch, x.h, x.w), v(x.n, ch, x.h, x.w);
        Tensor<T> attn(x.n, 1, hw, hw);
        Tensor<T> y(x.n, ch, x.h, x.w);
        std::vector<T> o(static_cast<size_t>(ch) * hw);
        for (int ni = 0; ni < x.n; ++ni) {
            const T* xi = x.ptr(ni, 0);
            project(xi, hw, wq, bq, q.ptr(ni, 0));
            project(xi, hw, wk, bk, kk.ptr(ni, 0));
            project(xi, hw, wv, bv, v.ptr(ni, 0));
            T* a = attn.ptr(ni, 0);
            // scores = q^T k / sqrt(c), softmax over rows
            gemm(true, false, hw, hw, ch, scale, q.ptr(ni, 0), hw, kk.ptr(ni, 0), hw, T(0), a, hw);
            softmax_rows(a, hw);
            // o = v * a^T; out token i mixes value tokens by row i of a
            gemm(false, true, ch, hw, hw, T(1), v.ptr(ni, 0), hw, a, hw, T(0), o.data(), hw);
            project(o.data(), hw, wo, bo, y.ptr(ni, 0));
            const T* resid = xi;
            T* dst = y.ptr(ni, 0);
            for (size_t i = 0; i < static_cast<size_t>(ch) * hw; ++i) dst[i] += resid[i];
        }
        if (tape) {
            tape->push(x);
            tape->push(std::move(q));
            tape->push(std::move(kk));
            tape->push(std::move(v));
            tape->push(std::move(attn));
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gout, Tape<T>& tape) {
        Tensor<T> attn = tape.pop();
        Tensor<T> v = tape.pop();
        Tensor<T> kk = tape.pop();
        Tensor<T> q = tape.pop();
        Tensor<T> x = tape.pop();
        const int hw = x.plane();
        const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(ch)));
        Tensor<T> gin = gout; // residual path
        std::vector<T> o(static_cast<size_t>(ch) * hw), dO(o.size()), dQ(o.size()), dK(o.size()),
            dV(o.size());
        std::vector<T> dA(static_cast<size_t>(hw) * hw);
        for (int ni = 0; ni < x.n; ++ni) {
            const T* a = attn.ptr(ni, 0);
            const T* go = gout.ptr(ni, 0);
            // recompute o for the wo gradient
            gemm(false, true, ch, hw, hw, T(1), v.ptr(ni, 0), hw, a, hw, T(0), o.data(), hw);
            // y = wo * o + bo (+x): accumulate wo/bo grads, dO = wo^T * go
            gemm(false, true, ch, ch, hw, T(1), go, hw, o.data(), hw, T(1), gwo.data.data(), ch);
            accumulate_bias(go, hw, gbo);
            gemm(true, false, ch, hw, ch, T(1), wo.data.data(), ch, go, hw, T(0), dO.data(), hw);
            // dV = dO * a ; dA = dO^T * v
            gemm(false, false, ch, hw, hw, T(1), dO.data(), hw, a, hw, T(0), dV.data(), hw);
            gemm(true, false, hw, hw, ch, T(1), dO.data(), hw, v.ptr(ni, 0), hw, T(0), dA.data(), hw);
            // softmax rows backward in place
            for (int i = 0; i < hw; ++i) {
                const T* ar = a + static_cast<size_t>(i) * hw;
                T* dr = dA.data() + static_cast<size_t>(i) * hw;
                double dot = 0.0;
                for (int j = 0; j < hw; ++j) dot += static_cast<double>(dr[j]) * ar[j];
                for (int j = 0; j < hw; ++j) dr[j] = static_cast<T>((dr[j] - dot) * ar[j]);
            }
            // dQ = k * dA^T * scale ; dK = q * dA * scale
            gemm(false, true, ch, hw, hw, scale, kk.ptr(ni, 0), hw, dA.data(), hw, T(0), dQ.data(), hw);
            gemm(false, false, ch, hw, hw, scale, q.ptr(ni, 0), hw, dA.data(), hw, T(0), dK.data(), hw);
            // back through the three input projections
            const T* xi = x.ptr(ni, 0);
            T* gi = gin.ptr(ni, 0);
            project_backward(xi, dQ.data(), hw, wq, gwq, gbq, gi);
            project_backward(xi, dK.data(), hw, wk, gwk, gbk, gi);
            project_backward(xi, dV.data(), hw, wv, gwv, gbv, gi);
        }
        return gin;
    }

private:
    void project(const T* x, int hw, const Tensor<T>& w, const Tensor<T>& b, T* out) const {
        gemm(false, false, ch, hw, ch, T(1), w.data.data(), ch, x, hw, T(0), out, hw);
        for (int ci = 0; ci < ch; ++ci) {
            T* dst = out + static_cast<size_t>(ci) * hw;
            const T bias = b.data[ci];
            for (int i = 0; i < hw; ++i) dst[i] += bias;
        }
    }

    void accumulate_bias(const T* g, int hw, Tensor<T>& gb) const {
        for (int ci = 0; ci < ch; ++ci) {
            const T* src = g + static_cast<size_t>(ci) * hw;
            T acc = T(0);
            for (int i = 0; i < hw; ++i) acc += src[i];
            gb.data[ci] += acc;
        }
    }

    void project_backward(const T* x, const T* dproj, int hw, const Tensor<T>& w, Tensor<T>& gw,
                          Tensor<T>& gb, T* gin) const {
        gemm(false, true, ch, ch, hw, T(1), dproj, hw, x, hw, T(1), gw.data.data(), ch);
        accumulate_bias(dproj, hw, gb);
        gemm(true, false, ch, hw, ch, T(1), w.data.data(), ch, dproj, hw, T(1), gin, hw);
    }

    void softmax_rows(T* a, int hw) const {
        for (int i = 0; i < hw; ++i) {
            T* row = a + static_cast<size_t>(i) * hw;
            T mx = row[0];
            for (int j = 1; j < hw; ++j) mx = std::max(mx, row[j]);
            T sum = T(0);
            for (int j = 0; j < hw; ++j) {
                const T e = std::exp(row[j] - mx);
                row[j] = e;
                sum += e;
            }
            const T inv = T(1) / sum;
            for (int j = 0; j < hw; ++j) row[j] *= inv;
        }
    }
};

// mean |pred - target|; the optional grad output receives sign/N
template <typename T>
double l1_loss(const Tensor<T>& pred, const Tensor<T>& target, Tensor<T>* grad = nullptr) {
    if (!pred.same_shape(target)) fail(Err::invalid, "l1_loss: shape mismatch");
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    double loss = 0.0;
    if (grad) *grad = Tensor<T>(pred.n, pred.c, pred.h, pred.w);
    for (size_t i = 0; i < pred.size(); ++i) {
        double d = static_cast<double>(pred.data[i]) - target.data[i];
        loss += std::abs(d);
        if (grad) grad->data[i] = static_cast<T>((d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0)) * inv_n);
    }
    return loss * inv_n;
}

// Huber-style smoothing; differentiable everywhere, used by the gradient check.
template <typename T>
double smooth_l1_loss(const Tensor<T>& pred, const Tensor<T>& target, double beta,
                      Tensor<T>* grad = nullptr) {
    if (!pred.same_shape(target)) fail(Err::invalid, "smooth_l1_loss: shape mismatch");
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    double loss = 0.0;
    if (grad) *grad = Tensor<T>(pred.n, pred.c, pred.h, pred.w);
    for (size_t i = 0; i < pred.size(); ++i) {
        double d = static_cast<double>(pred.data[i]) - target.data[i];
        if (std::abs(d) < beta) {
            loss += 0.5 * d * d / beta;
            if (grad) grad->data[i] = static_cast<T>(d / beta * inv_n);
        } else {
            loss += std::abs(d) - 0.5 * beta;
            if (grad) grad->data[i] = static_cast<T>((d > 0 ? 1.0 : -1.0) * inv_n);
        }
    }
    return loss * inv_n;
}

} // namespace dt::nn

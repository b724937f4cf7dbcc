#pragma once

#include <cblas.h>

#include <cstddef>
#include <vector>

namespace dt::nn {

// Dense NCHW tensor. float in the production path, double for gradient checks.
template <typename T>
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_),
          data(static_cast<size_t>(n_) * c_ * h_ * w_, T(0)) {}

    size_t size() const { return data.size(); }
    int plane() const { return h * w; }

    T* ptr(int ni, int ci) { return data.data() + (static_cast<size_t>(ni) * c + ci) * plane(); }
    const T* ptr(int ni, int ci) const {
        return data.data() + (static_cast<size_t>(ni) * c + ci) * plane();
    }

    T& at(int ni, int ci, int hi, int wi) {
        return data[((static_cast<size_t>(ni) * c + ci) * h + hi) * w + wi];
    }
    T at(int ni, int ci, int hi, int wi) const {
        return data[((static_cast<size_t>(ni) * c + ci) * h + hi) * w + wi];
    }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    void zero() { std::fill(data.begin(), data.end(), T(0)); }
};

// Row-major GEMM: C = alpha * op(A) op(B) + beta * C.
inline void gemm(bool ta, bool tb, int m, int n, int k, float alpha, const float* a, int lda,
                 const float* b, int ldb, float beta, float* c, int ldc) {
    cblas_sgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans, m,
                n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

inline void gemm(bool ta, bool tb, int m, int n, int k, double alpha, const double* a, int lda,
                 const double* b, int ldb, double beta, double* c, int ldc) {
    cblas_dgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans, m,
                n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

// LIFO activation store for backprop: forward pushes exactly what backward
// pops, in reverse order. A null tape means inference.
template <typename T>
struct Tape {
    std::vector<Tensor<T>> stack;

    void push(Tensor<T> t) { stack.push_back(std::move(t)); }
    Tensor<T> pop() {
        Tensor<T> t = std::move(stack.back());
        stack.pop_back();
        return t;
    }
    bool empty() const { return stack.empty(); }
    void clear() { stack.clear(); }
};

} // namespace dt::nn

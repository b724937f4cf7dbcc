#pragma once

#include "core/mat.hpp"
#include "core/nn/tensor.hpp"

namespace dt {

// Spectrogram slices travel as [1,1,rows,cols] tensors inside the network.
inline nn::Tensor<float> mat_to_tensor(const Mat& m) {
    nn::Tensor<float> t(1, 1, m.rows, m.cols);
    for (size_t i = 0; i < m.size(); ++i) t.data[i] = static_cast<float>(m.v[i]);
    return t;
}

inline Mat tensor_to_mat(const nn::Tensor<float>& t, int ni = 0) {
    Mat m(t.h, t.w);
    const float* src = t.ptr(ni, 0);
    for (size_t i = 0; i < m.size(); ++i) m.v[i] = src[i];
    return m;
}

} // namespace dt

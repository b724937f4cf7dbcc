#pragma once

#include <cmath>
#include <vector>

#include "core/nn/unet.hpp"

namespace dt::nn {

// Adam with decoupled weight decay. Weight decay is skipped for batch-norm
// affine terms and biases (single-element-per-channel tensors).
template <typename T>
class AdamW {
public:
    AdamW(double lr, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
          double eps = 1e-8)
        : lr_(lr), wd_(weight_decay), b1_(beta1), b2_(beta2), eps_(eps) {}

    void step(std::vector<ParamRef<T>>& params) {
        if (state_.empty()) {
            state_.reserve(params.size());
            for (auto& p : params) {
                state_.push_back({std::vector<double>(p.value->size(), 0.0),
                                  std::vector<double>(p.value->size(), 0.0)});
            }
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(b1_, t_);
        const double bc2 = 1.0 - std::pow(b2_, t_);
        for (size_t pi = 0; pi < params.size(); ++pi) {
            auto& p = params[pi];
            auto& st = state_[pi];
            const bool decay = p.name.find(".w") != std::string::npos;
            for (size_t i = 0; i < p.value->size(); ++i) {
                const double g = static_cast<double>(p.grad->data[i]);
                st.m[i] = b1_ * st.m[i] + (1.0 - b1_) * g;
                st.v[i] = b2_ * st.v[i] + (1.0 - b2_) * g * g;
                double update = (st.m[i] / bc1) / (std::sqrt(st.v[i] / bc2) + eps_);
                if (decay) update += wd_ * static_cast<double>(p.value->data[i]);
                p.value->data[i] -= static_cast<T>(lr_ * update);
            }
        }
    }

    long long steps_taken() const { return t_; }

private:
    struct State {
        std::vector<double> m, v;
    };

    double lr_, wd_, b1_, b2_, eps_;
    long long t_ = 0;
    std::vector<State> state_;
};

} // namespace dt::nn

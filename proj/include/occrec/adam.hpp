#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace occrec {

struct AdamConfig {
    double lr = 3.5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// lr multiplier for a step-decay schedule: x0.1 after each listed epoch.
inline double lr_decay_multiplier(const std::vector<int>& decay_epochs, int epoch, double factor = 0.1) {
    double mult = 1.0;
    for (int e : decay_epochs)
        if (epoch >= e) mult *= factor;
    return mult;
}

class Adam {
public:
    Adam(std::size_t n, AdamConfig cfg) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

    void step(std::vector<double>& params, const std::vector<double>& grads, double lr_scale = 1.0) {
        ++t_;
        const double lr = cfg_.lr * lr_scale;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
        const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
            v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grads[i] * grads[i];
            const double mhat = m_[i] / bc1;
            const double vhat = v_[i] / bc2;
            params[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }

private:
    AdamConfig cfg_;
    long t_ = 0;
    std::vector<double> m_, v_;
};

}  // namespace occrec

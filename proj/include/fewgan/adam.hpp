#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fewgan/error.hpp"

namespace fewgan {

struct AdamConfig {
    double lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Standard Adam with bias correction. The whole gradient is checked for
// finiteness before any parameter is touched; a bad gradient leaves the
// parameters untouched and raises DivergenceError.
class AdamState {
public:
    explicit AdamState(std::size_t n) : m_(n, 0.0), v_(n, 0.0) {}

    void step(std::vector<double>& params, const std::vector<double>& grad,
              const AdamConfig& cfg) {
        if (params.size() != m_.size() || grad.size() != m_.size())
            throw ContractError("adam: parameter/gradient size mismatch");
        for (std::size_t i = 0; i < grad.size(); ++i)
            if (!std::isfinite(grad[i]))
                throw DivergenceError("adam: non-finite gradient at index " + std::to_string(i));
        ++t_;
        const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < grad.size(); ++i) {
            const double g = grad[i];
            m_[i] = cfg.beta1 * m_[i] + (1.0 - cfg.beta1) * g;
            v_[i] = cfg.beta2 * v_[i] + (1.0 - cfg.beta2) * g * g;
            const double mhat = m_[i] / c1;
            const double vhat = v_[i] / c2;
            params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }

    std::size_t steps_taken() const { return t_; }

private:
    std::vector<double> m_, v_;
    std::size_t t_ = 0;
};

}  // namespace fewgan

#include "dcr/adam.hpp"

#include <cmath>

#include "dcr/error.hpp"

namespace dcr {

Adam::Adam(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    if (lr < 0.0 || beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0 || eps <= 0.0) {
        throw ParameterError("Adam: invalid hyperparameters");
    }
}

void Adam::update(const std::string& name, Tensor& param, const std::vector<double>& grad) {
    const auto n = static_cast<std::size_t>(param.size());
    if (grad.size() != n) {
        throw DimensionError("Adam::update: gradient size " + std::to_string(grad.size()) +
                             " vs parameter size " + std::to_string(n));
    }
    Slot& slot = slots_[name];
    if (slot.m.empty()) {
        slot.m.assign(n, 0.0);
        slot.v.assign(n, 0.0);
    } else if (slot.m.size() != n) {
        throw StateError("Adam::update: parameter '" + name + "' changed size");
    }
    ++slot.t;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(slot.t));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(slot.t));

    std::vector<double> next(n);
    const auto& p = param.values();
    for (std::size_t i = 0; i < n; ++i) {
        slot.m[i] = beta1_ * slot.m[i] + (1.0 - beta1_) * grad[i];
        slot.v[i] = beta2_ * slot.v[i] + (1.0 - beta2_) * grad[i] * grad[i];
        const double m_hat = slot.m[i] / bc1;
        const double v_hat = slot.v[i] / bc2;
        // parameters live in float32 like every op result
        next[i] = static_cast<float>(p[i] - lr_ * m_hat / (std::sqrt(v_hat) + eps_));
    }
    param = Tensor(param.shape(), std::move(next));
}

}  // namespace dcr

#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "dcr/tensor.hpp"

namespace dcr {

// Adam with bias correction (Kingma & Ba). Per-parameter state is keyed by
// name so it survives reconstruction of the parameter set.
class Adam {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    // Applies one update to `param` in place using `grad` (same length).
    // Steps are counted per parameter.
    void update(const std::string& name, Tensor& param, const std::vector<double>& grad);

    double learning_rate() const { return lr_; }
    void set_learning_rate(double lr) { lr_ = lr; }

private:
    struct Slot {
        std::vector<double> m, v;
        std::int64_t t = 0;
    };

    double lr_, beta1_, beta2_, eps_;
    std::unordered_map<std::string, Slot> slots_;
};

}  // namespace dcr

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dcr/tensor.hpp"

namespace dcr {

using ScalarFn = std::function<Tensor(const Tensor&)>;

// Max over coordinates of |analytic - central difference| /
// max(|analytic|, |numeric|, 1e-8). Runs under the high-precision guard so
// both paths use 64-bit arithmetic.
double grad_check(const ScalarFn& f, const Tensor& x, double step);

struct GradCheckReport {
    std::string name;
    double max_rel_err = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

// The module-level and network-level checks behind the `gradcheck` CLI
// mode: every differentiable primitive at randomized small shapes, the
// composed attention blocks, and a sampled full-network check.
std::vector<GradCheckReport> run_standard_grad_checks(std::uint64_t seed);

}  // namespace dcr

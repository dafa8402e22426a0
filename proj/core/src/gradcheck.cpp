#include "dcr/gradcheck.hpp"

#include <cmath>

namespace dcr {

double grad_check(const ScalarFn& f, const Tensor& x, double step) {
    HighPrecisionGuard precision;

    std::vector<double> analytic;
    {
        Tape tape;
        Tensor tracked = x.detached();
        tape.watch(tracked);
        Tensor y = f(tracked);
        if (y.size() != 1) throw ContractError("grad_check: f must be scalar-valued");
        if (!std::isfinite(y.item())) throw NumericError("grad_check: f(x) is not finite");
        tape.backward(y);
        analytic = tape.grad(tracked);
    }

    auto eval_at = [&](std::vector<double> values) {
        Tensor probe(x.shape(), std::move(values));
        Tensor y = f(probe);
        const double v = y.item();
        if (!std::isfinite(v)) throw NumericError("grad_check: f(x±h) is not finite");
        return v;
    };

    double max_rel = 0.0;
    const auto& base = x.values();
    for (std::size_t i = 0; i < base.size(); ++i) {
        std::vector<double> plus = base, minus = base;
        plus[i] += step;
        minus[i] -= step;
        const double numeric = (eval_at(std::move(plus)) - eval_at(std::move(minus))) / (2 * step);
        const double denom = std::max({std::fabs(analytic[i]), std::fabs(numeric), 1e-8});
        max_rel = std::max(max_rel, std::fabs(analytic[i] - numeric) / denom);
    }
    return max_rel;
}

}  // namespace dcr

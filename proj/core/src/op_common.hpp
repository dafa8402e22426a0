#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "dcr/tensor.hpp"

namespace dcr::detail {

// Builds the result tensor for an op: quantizes to float32 (unless the
// high-precision guard is up), runs the finite check, and if a tape is
// active with at least one tracked input, appends a node whose backward fn
// sees a sink indexed by *input position* (untracked inputs get scratch
// buffers that are simply dropped).
inline Tensor finish(Shape shape, std::vector<double> values,
                     std::vector<const Tensor*> inputs, Tape::BackwardFn backward) {
    if (!high_precision_active()) {
        for (auto& v : values) v = static_cast<double>(static_cast<float>(v));
    }
    if (finite_checks_active()) {
        for (double v : values) {
            if (!std::isfinite(v)) throw NumericError("non-finite value in op output");
        }
    }

    Tensor out(std::move(shape), std::move(values));

    Tape* tape = Tape::active();
    if (!tape || !backward) return out;

    bool any_tracked = false;
    for (const Tensor* t : inputs) {
        if (t && t->tracked()) any_tracked = true;
    }
    if (!any_tracked) return out;

    Tape::Node node;
    node.size = out.size();
    std::vector<int> slot(inputs.size(), -1);
    std::vector<std::int64_t> sizes(inputs.size(), 0);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (!inputs[i]) continue;
        sizes[i] = inputs[i]->size();
        if (inputs[i]->tracked()) {
            slot[i] = static_cast<int>(node.parents.size());
            node.parents.push_back(inputs[i]->node);
            node.parent_sizes.push_back(inputs[i]->size());
        }
    }
    node.backward = [backward = std::move(backward), slot, sizes](
                        const std::vector<double>& gout, const Tape::GradSink& sink) {
        std::vector<std::vector<double>> scratch(slot.size());
        auto mapped = [&](std::size_t i) -> std::vector<double>& {
            if (slot[i] >= 0) return sink(static_cast<std::size_t>(slot[i]));
            auto& s = scratch[i];
            if (s.empty()) s.assign(static_cast<std::size_t>(sizes[i]), 0.0);
            return s;
        };
        backward(gout, mapped);
    };

    out.node = tape->append(std::move(node));
    out.tape_id = tape->id();
    return out;
}

}  // namespace dcr::detail

#include "dcr/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace dcr {

namespace {
thread_local Tape* g_active_tape = nullptr;
thread_local std::uint64_t g_tape_counter = 0;
thread_local bool g_high_precision = false;
thread_local bool g_finite_checks = false;
}  // namespace

std::int64_t numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)) {
    if (static_cast<std::int64_t>(values.size()) != numel(shape_)) {
        throw DimensionError("tensor: data length " + std::to_string(values.size()) +
                             " does not match shape " + shape_str(shape_));
    }
    data_ = std::make_shared<const std::vector<double>>(std::move(values));
}

Tensor::Tensor(Shape shape, std::initializer_list<double> values)
    : Tensor(std::move(shape), std::vector<double>(values)) {}

Tensor Tensor::zeros(Shape shape) {
    auto n = numel(shape);
    return Tensor(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), 0.0));
}

Tensor Tensor::full(Shape shape, double value) {
    auto n = numel(shape);
    return Tensor(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), value));
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{1}, {value}); }

double Tensor::item() const {
    if (size() != 1) {
        throw ContractError("item: tensor has " + std::to_string(size()) + " elements, expected 1");
    }
    return (*data_)[0];
}

bool Tensor::tracked() const {
    return node >= 0 && g_active_tape != nullptr && tape_id == g_active_tape->id();
}

Tensor Tensor::detached() const {
    Tensor t = *this;
    t.node = -1;
    t.tape_id = 0;
    return t;
}

Tape::Tape() : id_(++g_tape_counter) {
    previous_ = g_active_tape;
    g_active_tape = this;
}

Tape::~Tape() { g_active_tape = previous_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::watch(Tensor& t) {
    if (!t.defined()) throw ContractError("watch: undefined tensor");
    Node leaf;
    leaf.size = t.size();
    t.node = append(std::move(leaf));
    t.tape_id = id_;
}

std::int64_t Tape::append(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<std::int64_t>(nodes_.size()) - 1;
}

void Tape::backward(const Tensor& loss) {
    if (g_active_tape != this) throw StateError("backward: tape is not active");
    if (!loss.tracked()) throw StateError("backward: loss was not produced under this tape");
    if (loss.size() != 1) {
        throw ContractError("backward: loss must be scalar, got shape " + shape_str(loss.shape()));
    }

    std::vector<std::vector<double>> grads(nodes_.size());
    grads[static_cast<std::size_t>(loss.node)] = {1.0};

    for (std::int64_t i = loss.node; i >= 0; --i) {
        auto& g = grads[static_cast<std::size_t>(i)];
        if (g.empty()) continue;
        const Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.backward) {
            auto sink = [&](std::size_t k) -> std::vector<double>& {
                auto& pg = grads[static_cast<std::size_t>(n.parents[k])];
                if (pg.empty()) pg.assign(static_cast<std::size_t>(n.parent_sizes[k]), 0.0);
                return pg;
            };
            n.backward(g, sink);
        } else {
            auto& lg = leaf_grads_[i];
            if (lg.empty()) lg.assign(g.size(), 0.0);
            for (std::size_t k = 0; k < g.size(); ++k) lg[k] += g[k];
        }
        g.clear();
        g.shrink_to_fit();
    }
}

bool Tape::has_grad(const Tensor& leaf) const {
    return leaf.node >= 0 && leaf.tape_id == id_ && leaf_grads_.count(leaf.node) > 0;
}

const std::vector<double>& Tape::grad(const Tensor& leaf) const {
    if (leaf.node < 0 || leaf.tape_id != id_) {
        throw StateError("grad: tensor is not a leaf of this tape");
    }
    auto it = leaf_grads_.find(leaf.node);
    if (it == leaf_grads_.end()) {
        throw StateError("grad: no gradient accumulated for this leaf (run backward first)");
    }
    return it->second;
}

void Tape::zero_grad() { leaf_grads_.clear(); }

HighPrecisionGuard::HighPrecisionGuard() : previous_(g_high_precision) { g_high_precision = true; }
HighPrecisionGuard::~HighPrecisionGuard() { g_high_precision = previous_; }

bool high_precision_active() { return g_high_precision; }

void set_finite_checks(bool enabled) { g_finite_checks = enabled; }
bool finite_checks_active() { return g_finite_checks; }

}  // namespace dcr

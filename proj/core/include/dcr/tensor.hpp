#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <unordered_map>
#include <vector>

#include "dcr/error.hpp"

namespace dcr {

using Shape = std::vector<std::int64_t>;

std::int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major tensor of values. Storage is double for numerical
// headroom; after every operation values are quantized to float32 unless a
// HighPrecisionGuard is active, so normal forward/backward behaves as a
// 32-bit pipeline while the gradient checker can run in 64-bit.
class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, std::vector<double> values);
    Tensor(Shape shape, std::initializer_list<double> values);

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double value);
    static Tensor scalar(double value);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::int64_t dim(std::size_t axis) const { return shape_[axis]; }
    std::int64_t size() const { return data_ ? static_cast<std::int64_t>(data_->size()) : 0; }
    bool defined() const { return data_ != nullptr; }

    const std::vector<double>& values() const { return *data_; }
    double at(std::int64_t flat_index) const { return (*data_)[flat_index]; }
    double item() const;

    bool tracked() const;
    Tensor detached() const;

    // Gradient bookkeeping; managed by Tape and the op layer.
    std::int64_t node = -1;
    std::uint64_t tape_id = 0;

private:
    Shape shape_;
    std::shared_ptr<const std::vector<double>> data_;

    friend Tensor make_result(Shape shape, std::vector<double> values);
};

// Reverse-mode tape. One tape is active at a time (thread-local); tracked
// operations append nodes in topological order and backward() replays them
// in reverse. Leaf gradients accumulate across backward() calls until
// zero_grad().
class Tape {
public:
    using GradSink = std::function<std::vector<double>&(std::size_t parent_index)>;
    using BackwardFn = std::function<void(const std::vector<double>& grad_out, const GradSink& sink)>;

    struct Node {
        std::vector<std::int64_t> parents;
        std::vector<std::int64_t> parent_sizes;
        std::int64_t size = 0;
        BackwardFn backward;  // null for leaves
    };

    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active();

    // Registers t as a leaf whose gradient is retained after backward().
    void watch(Tensor& t);

    void backward(const Tensor& loss);

    bool has_grad(const Tensor& leaf) const;
    const std::vector<double>& grad(const Tensor& leaf) const;
    void zero_grad();

    std::int64_t append(Node n);
    std::uint64_t id() const { return id_; }
    std::size_t node_count() const { return nodes_.size(); }

private:
    std::uint64_t id_;
    std::vector<Node> nodes_;
    std::unordered_map<std::int64_t, std::vector<double>> leaf_grads_;
    Tape* previous_ = nullptr;
};

// Scoped 64-bit mode: suspends float32 quantization (gradient checker).
class HighPrecisionGuard {
public:
    HighPrecisionGuard();
    ~HighPrecisionGuard();

private:
    bool previous_;
};

bool high_precision_active();

// Checked mode: every op verifies its output is finite.
void set_finite_checks(bool enabled);
bool finite_checks_active();

}  // namespace dcr

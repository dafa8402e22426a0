#include "dcr/memory.hpp"

namespace dcr {

RegionMemory::RegionMemory(std::int64_t capacity) : capacity_(capacity) {
    if (capacity < 1) {
        throw ParameterError("RegionMemory: capacity must be positive, got " +
                             std::to_string(capacity));
    }
}

void RegionMemory::push_batch(const Tensor& embeddings) {
    if (embeddings.rank() != 2) {
        throw ContractError("push_batch: expected [BxC] embeddings, got " +
                            shape_str(embeddings.shape()));
    }
    const std::int64_t b = embeddings.dim(0), c = embeddings.dim(1);
    if (channels_ >= 0 && c != channels_) {
        throw ContractError("push_batch: embedding length " + std::to_string(c) +
                            " does not match stored length " + std::to_string(channels_));
    }
    channels_ = c;
    ++step_;
    if (b > capacity_) ++overflow_warnings_;

    const auto& v = embeddings.values();
    for (std::int64_t i = 0; i < b; ++i) {
        RegionEmbedding e;
        e.vec.assign(v.begin() + i * c, v.begin() + (i + 1) * c);
        e.step = step_;
        entries_.push_back(std::move(e));
        if (static_cast<std::int64_t>(entries_.size()) > capacity_) entries_.pop_front();
    }
}

Tensor RegionMemory::snapshot() const {
    const std::int64_t len = size();
    const std::int64_t c = channels_ >= 0 ? channels_ : 0;
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(len * c));
    for (const auto& e : entries_) data.insert(data.end(), e.vec.begin(), e.vec.end());
    return Tensor(Shape{len, c}, std::move(data));
}

void RegionMemory::reset() {
    entries_.clear();
    step_ = 0;
    overflow_warnings_ = 0;
}

}  // namespace dcr

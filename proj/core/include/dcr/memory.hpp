#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "dcr/tensor.hpp"

namespace dcr {

// One buffered contextual region embedding. Values are plain copies with no
// gradient linkage; step records the push that produced the entry.
struct RegionEmbedding {
    std::vector<double> vec;
    std::int64_t step = 0;
};

// Fixed-capacity FIFO bank of region embeddings from past mini-batches.
// Oldest entries are evicted per embedding once the bank is full.
class RegionMemory {
public:
    explicit RegionMemory(std::int64_t capacity);

    // Appends every row of a [B x C] embedding tensor (gradients severed by
    // copying values). Pushing more rows than the capacity keeps only the
    // newest `capacity` of them and counts a warning event.
    void push_batch(const Tensor& embeddings);

    // Dense [len x C] copy of the current entries, oldest first. Never
    // aliases internal storage. Empty memory yields a zero-row tensor.
    Tensor snapshot() const;

    void reset();

    std::int64_t capacity() const { return capacity_; }
    std::int64_t size() const { return static_cast<std::int64_t>(entries_.size()); }
    bool empty() const { return entries_.empty(); }
    std::int64_t channels() const { return channels_; }
    std::int64_t current_step() const { return step_; }
    std::int64_t overflow_warnings() const { return overflow_warnings_; }
    const std::deque<RegionEmbedding>& entries() const { return entries_; }

private:
    std::int64_t capacity_;
    std::int64_t channels_ = -1;
    std::int64_t step_ = 0;
    std::int64_t overflow_warnings_ = 0;
    std::deque<RegionEmbedding> entries_;
};

}  // namespace dcr

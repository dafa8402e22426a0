#pragma once

#include <string>

#include "dcr/network.hpp"

namespace dcr {

// Binary checkpoint: magic "DCRN", little-endian u32 version, u64 entry
// count, then per entry a length-prefixed name, u32 rank, u64 dims, and the
// float32 payload. Parameters and BN running statistics are stored; region
// memory is not.
void save_checkpoint(Network& net, const std::string& path);

// Restores into an already-constructed network. Missing or extra entries
// and any shape mismatch raise FormatError.
void load_checkpoint(Network& net, const std::string& path);

}  // namespace dcr

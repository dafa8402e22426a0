#pragma once

#include <stdexcept>
#include <string>

namespace dcr {

// Shape/axis disagreements between operands.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A caller violated an operation's precondition (non-binary mask, empty bank, ...).
struct ContractError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A scalar parameter is out of its valid range (even pooling kernel, factor < 1, ...).
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Operation issued in the wrong state (backward without an active tape, ...).
struct StateError : std::logic_error {
    using std::logic_error::logic_error;
};

// Bad run configuration (fraction sums, indivisible sizes, empty dataset).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed external input (NetPBM header, checkpoint magic/version).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failure (non-finite value in checked mode, non-finite f(x) in grad_check).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace dcr

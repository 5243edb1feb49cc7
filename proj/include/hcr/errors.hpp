// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace hcr {

// Base for everything thrown by this library. Subtypes exist so callers and
// tests can distinguish failure classes without parsing messages.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operand shapes incompatible with an operation. Messages name both shapes.
struct ShapeError : Error {
    using Error::Error;
};

// An API precondition was violated (non-scalar loss, non-unit rows, ...).
struct ContractError : Error {
    using Error::Error;
};

// Malformed on-disk data: bad magic, truncated payload, invalid manifest.
struct ParseError : Error {
    using Error::Error;
};

// Invalid experiment configuration (unknown key, out-of-range value).
struct ConfigError : Error {
    using Error::Error;
};

// Filesystem-level failure (unreadable / unwritable path).
struct IoError : Error {
    using Error::Error;
};

// A loss function evaluated twice with identical inputs gave different values.
struct DeterminismError : Error {
    using Error::Error;
};

} // namespace hcr

// Copyright (c) 2026, The MINT-TTA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mint {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand extents do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A documented precondition of an operation was violated by the caller.
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// A configuration value is outside its admissible range.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// An operation produced a NaN or infinity.
class NumericError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// The synthetic benchmark could not satisfy its construction target.
class GenerationError : public Error {
public:
    using Error::Error;
};

}  // namespace mint

// Copyright 2026 The cmj Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace cmj {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters, malformed configuration, grid mismatches.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a function (e.g. time outside [0, T]).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The model does not satisfy the moment/regularity assumptions an experiment needs.
class AssumptionError : public Error {
 public:
  using Error::Error;
};

/// A simulated tree exceeded its individual cap.
class TruncationError : public Error {
 public:
  using Error::Error;
};

}  // namespace cmj

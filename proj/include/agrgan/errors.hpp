// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace agrgan {

/// Tensor shapes or channel counts that do not line up.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A value outside the documented domain of an operation.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// NaN/Inf produced during training or a numerical threshold that was not met.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or mismatched checkpoint / dataset files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Warning channel. Non-fatal conditions (clamped norms, clamped pixels,
// under-represented age groups) are reported here instead of thrown.
using WarningSink = std::function<void(const std::string&)>;

void warn(const std::string& message);
/// Installs a sink and returns the previous one. An empty sink writes to stderr.
WarningSink set_warning_sink(WarningSink sink);
/// Number of warnings emitted since process start.
std::size_t warning_count();

}  // namespace agrgan

// Copyright 2026 The sabrsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SABR_COMMON_HPP_
#define SABR_COMMON_HPP_

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace sabr {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Input file could not be tokenized or has the wrong shape.
struct ParseError : Error {
  using Error::Error;
};

/// Input parsed but violates a domain invariant.
struct ValidationError : Error {
  using Error::Error;
};

/// A configuration value is out of range or missing.
struct ConfigError : Error {
  using Error::Error;
};

/// An operation was called on an object in the wrong state.
struct StateError : Error {
  using Error::Error;
};

/// A function argument violates its contract.
struct ArgumentError : Error {
  using Error::Error;
};

/// A computation produced a non-finite value.
struct NumericError : Error {
  using Error::Error;
};

/// A problem instance exceeds a hard size guard.
struct SizeError : Error {
  using Error::Error;
};

/// An action rejected by the simulator's action mask.
struct ActionMaskError : Error {
  using Error::Error;
};

// splitmix64; used to derive independent child seeds from one root seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Formats a double with enough digits to round-trip exactly.
inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace sabr

#endif  // SABR_COMMON_HPP_

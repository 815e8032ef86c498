// SPDX-License-Identifier: Apache-2.0
//
// Error taxonomy shared by every module. Each class maps to one failure
// family so tests and CLI handlers can match on the type alone.

#pragma once

#include <stdexcept>
#include <string>

namespace hegnn {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid scheme or pipeline parameters (ring degree, prime sizes, thresholds).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Input exceeds what the chosen parameters can hold (slot capacity, encoding range).
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Operands disagree on level, scale, or slot count.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

// The modulus chain ran out of levels for the requested operation.
class DepthExhaustedError : public Error {
 public:
  using Error::Error;
};

// Missing or mismatched key material (rotation step without a key, wrong key set).
class KeyError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; message carries file and line context where known.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Model weights inconsistent with the graph or layer dimensions.
class ModelError : public Error {
 public:
  using Error::Error;
};

// Graph data invalid (node id out of range, ragged feature rows).
class DataError : public Error {
 public:
  using Error::Error;
};

// Bad CLI or config-file input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace hegnn

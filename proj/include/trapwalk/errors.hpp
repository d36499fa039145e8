#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace trapwalk {

/// A state value that is not a valid encoding for the chain it was given to.
struct EncodingError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Linear/fixed-point solve failed (singular system or iteration cap hit).
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Experiment configuration rejected; lists the offending fields.
struct ConfigError : std::invalid_argument {
  ConfigError(std::string msg, std::vector<std::string> bad_fields)
      : std::invalid_argument(std::move(msg)), fields(std::move(bad_fields)) {}
  std::vector<std::string> fields;
};

}  // namespace trapwalk

#pragma once

#include <stdexcept>
#include <string>

namespace pointseg {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem or OS level failure (missing file, unwritable path).
struct IoError : Error {
  using Error::Error;
};

// Malformed file contents: bad PNG, schema violation in a JSON document.
struct FormatError : Error {
  using Error::Error;
};

// A caller violated an API precondition (shape mismatch, bad argument).
struct ContractError : Error {
  using Error::Error;
};

// Invalid configuration values.
struct ConfigError : Error {
  using Error::Error;
};

// Training aborted (non-finite loss, divergence).
struct TrainError : Error {
  using Error::Error;
};

// Dataset evaluation could not proceed (missing ground truth, empty set).
struct EvalError : Error {
  using Error::Error;
};

}  // namespace pointseg

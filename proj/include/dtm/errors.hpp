#pragma once

#include <stdexcept>
#include <string>

namespace dtm {

// Operand shapes do not agree (messages name the offending dims).
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A value is outside its documented domain (bad label, bad mask dims, ...).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad configuration: unknown key, out-of-range hyperparameter, ...
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File system / format failures.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values where finite ones are required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Checkpoint does not match the model (magic, version, names, dims).
struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// API misuse (e.g. backward on a non-scalar).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dtm

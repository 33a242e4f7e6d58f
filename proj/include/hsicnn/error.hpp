#pragma once

#include <stdexcept>
#include <string>

namespace hsicnn {

enum class ErrorKind {
  invalid_shape,
  bounds,
  format,
  split,
  dimension,
  insufficient_data,
  invalid_window,
  architecture,
  shape,
  state,
  invalid_rate,
  label,
  training,
  checkpoint,
  input,
  empty_matrix,
  io,
  config,
};

inline const char* kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_shape: return "invalid-shape";
    case ErrorKind::bounds: return "bounds";
    case ErrorKind::format: return "format";
    case ErrorKind::split: return "split";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::invalid_window: return "invalid-window";
    case ErrorKind::architecture: return "architecture";
    case ErrorKind::shape: return "shape";
    case ErrorKind::state: return "state";
    case ErrorKind::invalid_rate: return "invalid-rate";
    case ErrorKind::label: return "label";
    case ErrorKind::training: return "training";
    case ErrorKind::checkpoint: return "checkpoint";
    case ErrorKind::input: return "input";
    case ErrorKind::empty_matrix: return "empty-matrix";
    case ErrorKind::io: return "io";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

// Every failure raised by the library carries a kind so callers (and the
// CLI's one-line error output) can dispatch on it without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace hsicnn

#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace kstgp {

struct FactorizationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidConfig : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonBinaryLabel : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateColumn : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainingDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptySet : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnknownAF : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RowOutOfRange : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-fatal warning events (skipped updates, failed refits). Default
/// handler writes to stderr; tests may install their own to count events.
void warn(const std::string& msg);
void set_warning_handler(std::function<void(const std::string&)> handler);

}  // namespace kstgp

#pragma once

#include <stdexcept>
#include <string>

namespace botl {

struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Training window has no usable spread (e.g. all rows identical).
struct DegenerateWindow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingletonRegistry : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LengthMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EmptyWindow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnknownModel : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MissingColumn : std::runtime_error {
  explicit MissingColumn(const std::string& column)
      : std::runtime_error("missing column: " + column), column(column) {}
  std::string column;
};

struct MalformedRow : std::runtime_error {
  MalformedRow(long row, const std::string& what)
      : std::runtime_error("row " + std::to_string(row) + ": " + what),
        row(row) {}
  long row;
};

struct EmptyFile : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Configuration problems carry the offending field path for diagnostics.
struct ConfigError : std::runtime_error {
  ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error("config field '" + field + "': " + what),
        field(field) {}
  std::string field;
};

}  // namespace botl

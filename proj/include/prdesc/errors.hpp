#pragma once

#include <stdexcept>
#include <string>

namespace prdesc {

/// Malformed input data (corpus lines, vocab files, checkpoints).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised while parsing a PR record; carries the name of the offending field.
class ParseError : public DataError {
 public:
  ParseError(std::string field, const std::string& what)
      : DataError(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Training loss or gradient became non-finite.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace prdesc

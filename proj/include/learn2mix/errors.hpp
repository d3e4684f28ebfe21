#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace l2m {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyClass : public Error {
 public:
  explicit EmptyClass(std::size_t class_id)
      : Error("class " + std::to_string(class_id) + " has no samples"), class_id_(class_id) {}
  std::size_t class_id() const noexcept { return class_id_; }

 private:
  std::size_t class_id_;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidSize : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class MissingColumn : public Error {
 public:
  explicit MissingColumn(std::string column)
      : Error("missing column '" + column + "'"), column_(std::move(column)) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

class NonNumericFeature : public Error {
 public:
  NonNumericFeature(std::size_t line, std::string column)
      : Error("line " + std::to_string(line) + ": non-numeric value in column '" + column + "'"),
        line_(line),
        column_(std::move(column)) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::string column_;
};

class NegativeLoss : public Error {
 public:
  using Error::Error;
};

class ZeroTotalLoss : public Error {
 public:
  using Error::Error;
};

class NonFiniteLoss : public Error {
 public:
  using Error::Error;
};

class StepDiverged : public Error {
 public:
  using Error::Error;
};

/// Bad configuration or command line usage; maps to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace l2m

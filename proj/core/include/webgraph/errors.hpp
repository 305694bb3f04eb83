#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace webgraph {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data is malformed or inconsistent (maps to CLI exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

class MalformedLine : public DataError {
 public:
  explicit MalformedLine(std::size_t line_no, const std::string& what = "unparseable JSON")
      : DataError("line " + std::to_string(line_no) + ": " + what), line_no_(line_no) {}
  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_;
};

class SchemaViolation : public DataError {
 public:
  SchemaViolation(std::size_t line_no, std::string field)
      : DataError("line " + std::to_string(line_no) + ": missing or mistyped field '" + field + "'"),
        line_no_(line_no),
        field_(std::move(field)) {}
  std::size_t line_no() const noexcept { return line_no_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_no_;
  std::string field_;
};

class DanglingReference : public DataError {
 public:
  DanglingReference(std::size_t line_no, std::string id)
      : DataError("line " + std::to_string(line_no) + ": reference to undeclared id '" + id + "'"),
        line_no_(line_no),
        id_(std::move(id)) {}
  std::size_t line_no() const noexcept { return line_no_; }
  const std::string& id() const noexcept { return id_; }

 private:
  std::size_t line_no_;
  std::string id_;
};

class UnparseableUrl : public DataError {
 public:
  explicit UnparseableUrl(const std::string& url) : DataError("unparseable URL '" + url + "'") {}
};

class InvalidRule : public DataError {
 public:
  InvalidRule(std::size_t line_no, const std::string& rule)
      : DataError("line " + std::to_string(line_no) + ": invalid filter rule '" + rule + "'"),
        line_no_(line_no) {}
  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_;
};

class SingleClassTraining : public DataError {
 public:
  SingleClassTraining() : DataError("training data must contain both ATS and Non-ATS samples") {}
};

class FeatureSetMismatch : public DataError {
 public:
  using DataError::DataError;
};

class TooFewPages : public DataError {
 public:
  TooFewPages(std::size_t pages, std::size_t k)
      : DataError("cannot split " + std::to_string(pages) + " pages into " + std::to_string(k) +
                  " folds") {}
};

class InvalidMutation : public DataError {
 public:
  using DataError::DataError;
};

/// An internal consistency check failed (maps to CLI exit code 3).
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace webgraph

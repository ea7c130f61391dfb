#ifndef TREEKT_ERRORS_HPP
#define TREEKT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace treekt {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input document could not be read or does not match its format.
class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class UnknownNodeError : public Error {
 public:
  explicit UnknownNodeError(const std::string& id)
      : Error("unknown node: " + id), id_(id) {}

  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

// Numerically degenerate message passing (zero upward message).
class InferenceError : public Error {
 public:
  using Error::Error;
};

class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace treekt

#endif  // TREEKT_ERRORS_HPP

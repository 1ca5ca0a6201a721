#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hner {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes or layer sizes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Inputs that make an operation meaningless: all-pad masks, empty sentences.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class DegenerateOutputError : public Error {
 public:
  using Error::Error;
};

// Out-of-range hyperparameters and configuration values.
class ParameterError : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class LoadError : public Error {
 public:
  using Error::Error;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace hner

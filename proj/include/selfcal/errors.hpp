#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace selfcal {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed PPM/PGM/PFM payload; `offset` is the byte where parsing stopped.
class ParseError : public Error {
 public:
  ParseError(const std::string &what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class SerializationError : public Error {
 public:
  using Error::Error;
};

/// Mismatched or degenerate dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class EmptyMaskError : public Error {
 public:
  EmptyMaskError() : Error("validity mask selects no pixels") {}
};

/// A rendered pixel ray that hit no plane.
class CoverageError : public Error {
 public:
  CoverageError(int x, int y)
      : Error("pixel (" + std::to_string(x) + ", " + std::to_string(y) + ") ray misses every plane"), x_(x), y_(y) {}
  int x() const { return x_; }
  int y() const { return y_; }

 private:
  int x_;
  int y_;
};

class ProblemError : public Error {
 public:
  using Error::Error;
};

/// Non-finite objective or gradient during optimization.
class DivergenceError : public Error {
 public:
  DivergenceError(int iteration, int level = -1)
      : Error("non-finite objective or gradient at iteration " + std::to_string(iteration) +
              (level >= 0 ? " (level " + std::to_string(level) + ")" : std::string())),
        iteration_(iteration),
        level_(level) {}
  int iteration() const { return iteration_; }
  int level() const { return level_; }

 private:
  int iteration_;
  int level_;
};

/// Manifest, config or report content that does not match its schema.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace selfcal

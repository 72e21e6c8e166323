#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bellshrink {

// Argument outside the mathematical domain of a function (e.g. W0 of a
// negative number, a diverging inverse moment).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Cholesky factorization failed even after one diagonal jitter retry.
class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError(const std::string& what, std::ptrdiff_t leading_minor)
      : std::runtime_error(what), leading_minor_(leading_minor) {}

  // 1-based order of the first non-positive leading principal minor.
  std::ptrdiff_t leading_minor() const noexcept { return leading_minor_; }

 private:
  std::ptrdiff_t leading_minor_;
};

// Non-finite evaluation or a hard failure of an iterative procedure.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. line() is 1-based; 0 means "whole file".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace bellshrink

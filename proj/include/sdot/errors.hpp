#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sdot {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: malformed files, out-of-range indices, zero masses...
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A file could not be parsed. `line()` is 1-based, 0 when unknown.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : ValidationError(path + (line ? ":" + std::to_string(line) : std::string()) +
                        ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

/// A pair of sites whose interface violates the genericity assumption on a
/// given triangle.
struct DegeneratePair {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  std::uint32_t triangle = 0;

  friend bool operator==(const DegeneratePair&, const DegeneratePair&) = default;
};

/// The Laguerre diagram is not generic (parallel bisector and triangle
/// planes, or three cells sharing a segment). Retrying with slightly
/// perturbed sites usually resolves it.
class DegeneracyError : public Error {
 public:
  DegeneracyError(const std::string& what, std::vector<DegeneratePair> pairs)
      : Error(what), pairs_(std::move(pairs)) {}

  const std::vector<DegeneratePair>& pairs() const { return pairs_; }

  bool involves(std::uint32_t a, std::uint32_t b) const {
    if (a > b) std::swap(a, b);
    for (const auto& p : pairs_)
      if (p.i == a && p.j == b) return true;
    return false;
  }

 private:
  std::vector<DegeneratePair> pairs_;
};

/// Some cell stayed massless after the bounded perturbation of the initial
/// weights.
class InitializationError : public Error {
 public:
  InitializationError(const std::string& what, std::vector<std::uint32_t> sites)
      : Error(what), sites_(std::move(sites)) {}

  const std::vector<std::uint32_t>& sites() const { return sites_; }

 private:
  std::vector<std::uint32_t> sites_;
};

class RegistrationError : public Error {
 public:
  using Error::Error;
};

}  // namespace sdot

#pragma once

#include <stdexcept>
#include <string>

namespace bsl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition or model-invariant violation.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class GridFormatError : public Error {
 public:
  enum class Code { Io, Truncated, BadMagic, BadVersion, UnsupportedDimension, BadSize, BadKind };
  GridFormatError(Code code, const std::string& what) : Error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

// Input to the resolvent carries mass outside the scattering domain.
class ContractError : public Error {
 public:
  using Error::Error;
};

class DivergedError : public Error {
 public:
  DivergedError(double k, double ratio)
      : Error("Neumann iteration diverged at k = " + std::to_string(k) +
              " (contraction ratio " + std::to_string(ratio) + ")"),
        k_(k),
        ratio_(ratio) {}
  double k() const { return k_; }
  double contraction_ratio() const { return ratio_; }

 private:
  double k_;
  double ratio_;
};

class DegenerateFieldError : public Error {
 public:
  using Error::Error;
};

class IllConditionedError : public Error {
 public:
  using Error::Error;
};

class InsufficientCoverageError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace bsl

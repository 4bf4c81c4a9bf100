#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace repmc {

enum class ErrorCode {
  InvalidArgument,  // bad dimensions, empty inputs, degenerate values
  InvalidConfig,    // configuration failed validation
  Diverged,         // a chain produced non-finite or runaway parameters
  Io,               // filesystem failure while writing outputs
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

class InvalidArgumentError : public Error {
 public:
  explicit InvalidArgumentError(std::string message)
      : Error(ErrorCode::InvalidArgument, std::move(message)) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::string message)
      : Error(ErrorCode::InvalidConfig, std::move(message)) {}
};

class DivergedError : public Error {
 public:
  DivergedError(std::string message, std::size_t chain, std::size_t cycle,
                std::size_t iteration)
      : Error(ErrorCode::Diverged, std::move(message)),
        chain_(chain),
        cycle_(cycle),
        iteration_(iteration) {}

  std::size_t chain() const { return chain_; }
  std::size_t cycle() const { return cycle_; }
  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t chain_;
  std::size_t cycle_;
  std::size_t iteration_;
};

class IoError : public Error {
 public:
  explicit IoError(std::string message)
      : Error(ErrorCode::Io, std::move(message)) {}
};

}  // namespace repmc

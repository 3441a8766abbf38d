#pragma once

#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>

namespace hsf {

/// Invalid model or basis parameters supplied by the caller.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A documented precondition of an operation was violated.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A numerical routine could not reach its requested accuracy.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using WarningHandler = std::function<void(const std::string&)>;

namespace detail {
inline WarningHandler& warning_handler() {
  static WarningHandler handler = [](const std::string& msg) {
    std::cerr << "hsf warning: " << msg << '\n';
  };
  return handler;
}
}  // namespace detail

/// Replace the process-wide warning sink. Returns the previous handler.
inline WarningHandler set_warning_handler(WarningHandler handler) {
  auto previous = std::move(detail::warning_handler());
  detail::warning_handler() = std::move(handler);
  return previous;
}

inline void warn(const std::string& msg) {
  if (detail::warning_handler()) detail::warning_handler()(msg);
}

}  // namespace hsf

#pragma once

#include <stdexcept>
#include <string>

namespace mragp {

// Exit-code mapping used by the CLI: validation -> 2, numerical -> 3, transport -> 4.

struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct TransportError : std::runtime_error {
  explicit TransportError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mragp

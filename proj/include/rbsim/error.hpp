#pragma once

#include <stdexcept>
#include <string>

namespace rbsim {

// Base error for all library failures (bad config, malformed input,
// violated precondition). Message carries the context.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rbsim

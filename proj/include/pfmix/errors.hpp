#pragma once

#include <stdexcept>

namespace pfmix {

// File-system and format failures; mapped to a dedicated CLI exit code.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pfmix

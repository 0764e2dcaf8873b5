#pragma once

#include <stdexcept>
#include <string>

namespace fbgskin {

// Failures reading or writing files (exit code 2 at the CLI); everything
// else thrown by the library is treated as validation (exit code 1).
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fbgskin

#pragma once

#include <stdexcept>
#include <string>

namespace turbres {

/// File not found, unsupported format, corrupt header, write failure.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Iterative solver failed to make progress (residual increased, or no
/// descent direction produced a decrease on the first iteration).
class solver_error : public std::runtime_error {
public:
    explicit solver_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace turbres

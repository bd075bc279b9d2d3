#pragma once

#include <stdexcept>
#include <string>

namespace pmilab {

/// Failure category. The CLI maps these onto process exit codes.
enum class ErrorKind {
    usage = 1,
    data = 2,
    divergence = 3,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

}  // namespace pmilab

#pragma once

#include <stdexcept>
#include <string>

namespace mfl {

enum class ErrorKind {
    domain,          // argument outside the mathematical domain of an operation
    validation,      // malformed specification or configuration
    resource_limit,  // configured size cap exceeded
    numeric,         // degenerate or non-finite numerical result
    unsupported,     // operation not defined for the given variant
    io,              // file could not be read or written
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what)
{
    if (!condition) fail(kind, what);
}

/// Maximum number of cells/intervals any single construction may allocate.
/// Read from MFL_MAX_CELLS when set, otherwise 2^24.
std::size_t resource_cap();

}  // namespace mfl

#ifndef ORBEX_ERROR_HPP
#define ORBEX_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace orbex {

enum class ErrorKind {
    DivisionByZero,
    PossiblyZeroDivisor,
    DimensionMismatch,
    Unsupported,
    NotInvariant,
    RationalityUndecidable,
    NotInverse,
    UnsupportedSystemKind,
    NotAWitness,
    ModulusViolated,
    DegenerateInput,
    UnknownEntry,
    UnknownLaw,
    InvalidArgument,
    ParseError,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace orbex

#endif

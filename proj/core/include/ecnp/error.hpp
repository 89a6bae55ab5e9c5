#pragma once

#include <stdexcept>
#include <string>

namespace ecnp {

/// Error conditions raised by the library. The kind is machine-checkable so
/// callers (and tests) do not have to parse messages.
class Error : public std::runtime_error {
public:
    enum class Kind {
        ShapeMismatch,
        DomainError,
        NonScalarRoot,
        InvalidParams,
        AlphaTooSmall,
        EmptyContext,
        KTooLarge,
        BadMagic,
        TruncatedFile,
        CholeskyFailure,
        VersionMismatch,
        CorruptFile,
        UnknownKey,
        TypeError,
        MissingRequired,
        NonFiniteLoss,
        IoError,
    };

    Error(Kind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

[[noreturn]] inline void raise(Error::Kind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace ecnp

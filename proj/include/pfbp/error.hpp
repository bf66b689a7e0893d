#pragma once

#include <stdexcept>
#include <string>

namespace pfbp {

enum class LoadErrorKind {
    Io,
    Parse,
    MissingValue,
    NonFinite,
    NonBinaryTarget,
    Shape,
    BadFormat,
};

inline const char* to_string(LoadErrorKind kind) {
    switch (kind) {
    case LoadErrorKind::Io: return "Io";
    case LoadErrorKind::Parse: return "Parse";
    case LoadErrorKind::MissingValue: return "MissingValue";
    case LoadErrorKind::NonFinite: return "NonFinite";
    case LoadErrorKind::NonBinaryTarget: return "NonBinaryTarget";
    case LoadErrorKind::Shape: return "Shape";
    case LoadErrorKind::BadFormat: return "BadFormat";
    }
    return "Unknown";
}

/// Raised while reading or validating a dataset file.
class LoadError : public std::runtime_error {
public:
    LoadError(LoadErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    LoadErrorKind kind() const noexcept { return kind_; }

private:
    LoadErrorKind kind_;
};

/// Invalid run configuration (bad flag values, unknown JSON keys, ...).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A caller violated an operation's precondition.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {
inline void require(bool cond, const std::string& msg) {
    if (!cond) throw PreconditionError(msg);
}
}  // namespace detail

}  // namespace pfbp

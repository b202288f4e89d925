#ifndef DELTADPD_ERRORS_HPP
#define DELTADPD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace deltadpd {

// Exit-code contract used by the CLI: each error category maps to a
// distinct nonzero process exit code.
enum class ExitCode : int {
    Ok = 0,
    ConfigError = 2,
    IoError = 3,
    NumericError = 4,
    GateUnmet = 5,
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct StructuralError : std::runtime_error {
    explicit StructuralError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace deltadpd

#endif

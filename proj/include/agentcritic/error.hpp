#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace agentcritic {

// Failure classes map one-to-one onto CLI exit codes.
enum class ErrorKind { config = 2, io = 3, transport = 4, numeric = 5, invalid = 6 };

inline std::string_view to_string(ErrorKind k) {
    switch (k) {
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
    case ErrorKind::transport: return "transport";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::invalid: return "invalid";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

// Raised by remote adapters; carries how many attempts were made before giving up.
struct TransportError : Error {
    TransportError(const std::string& what, int attempts, int http_status = 0)
        : Error(ErrorKind::transport, what), attempts(attempts), http_status(http_status) {}
    int attempts;
    int http_status;
};

struct NumericError : Error {
    explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

// Precondition / invariant violations on domain values.
struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& what) : Error(ErrorKind::invalid, what) {}
};

struct ParseError : Error {
    ParseError(const std::string& what, std::size_t line)
        : Error(ErrorKind::io, "line " + std::to_string(line) + ": " + what), line(line) {}
    std::size_t line;
};

} // namespace agentcritic

#pragma once

#include <stdexcept>
#include <string>

namespace attrib {

// Error categories map onto CLI exit codes: config/io -> 2, numeric -> 3.
enum class ErrorKind { config, io, numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

inline Error config_error(std::string message) { return Error(ErrorKind::config, std::move(message)); }
inline Error io_error(std::string message) { return Error(ErrorKind::io, std::move(message)); }
inline Error numeric_error(std::string message) { return Error(ErrorKind::numeric, std::move(message)); }

}  // namespace attrib

#pragma once

#include <stdexcept>
#include <string>

namespace feedsim
{
    /// Parameters that cannot be satisfied (bad population sizes, incompatible means, ...).
    class ConfigError : public std::invalid_argument
    {
    public:
        explicit ConfigError(const std::string &what) : std::invalid_argument(what) {}
    };

    /// Logs or artifacts that violate their invariants: phantom tweets, unordered logs, bad lines.
    class IntegrityError : public std::runtime_error
    {
    public:
        explicit IntegrityError(const std::string &what) : std::runtime_error(what) {}
    };
}

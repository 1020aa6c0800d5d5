#pragma once

#include <stdexcept>
#include <string>

namespace renorm {

enum class ErrorKind { config, numerical, budget };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& module, const std::string& what)
        : std::runtime_error(module + ": " + what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

inline Error config_error(const std::string& module, const std::string& what) {
    return Error(ErrorKind::config, module, what);
}

inline Error numerical_error(const std::string& module, const std::string& what) {
    return Error(ErrorKind::numerical, module, what);
}

inline Error budget_error(const std::string& module, const std::string& what) {
    return Error(ErrorKind::budget, module, what);
}

}  // namespace renorm

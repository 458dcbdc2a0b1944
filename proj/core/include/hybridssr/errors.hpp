#pragma once

#include <stdexcept>
#include <string>

namespace hybridssr {

/// Distinguishes bad input from numerical breakdown; the CLI maps these to
/// exit codes 1 and 2.
enum class ErrorKind { kValidation, kNumerical };

class Error : public std::runtime_error {
   public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

   private:
    ErrorKind kind_;
};

class ValidationError : public Error {
   public:
    explicit ValidationError(const std::string& what)
        : Error(ErrorKind::kValidation, what) {}
};

class NumericalError : public Error {
   public:
    explicit NumericalError(const std::string& what)
        : Error(ErrorKind::kNumerical, what) {}
};

}  // namespace hybridssr

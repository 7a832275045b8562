#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bpr {

// Categories double as the CLI exit-code contract: io=2, validation/shape=3, numerical=4.
enum class ErrorCategory { Io, Validation, Shape, Numerical };

std::string_view category_name(ErrorCategory category);
int exit_code(ErrorCategory category);

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorCategory::Io, what) {}
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ErrorCategory::Validation, what) {}
};

class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& what) : Error(ErrorCategory::Shape, what) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ErrorCategory::Numerical, what) {}
};

/// Raised when a monomial count does not fit in a signed 64-bit index.
class DimensionOverflow : public ValidationError {
public:
    explicit DimensionOverflow(const std::string& what) : ValidationError(what) {}
};

/// SGD produced a non-finite loss.
class DivergenceError : public NumericalError {
public:
    DivergenceError(const std::string& what, int epoch) : NumericalError(what), epoch_(epoch) {}
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw ValidationError(message);
}

}  // namespace bpr

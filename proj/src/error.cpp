#include "bpr/error.hpp"

namespace bpr {

std::string_view category_name(ErrorCategory category) {
    switch (category) {
        case ErrorCategory::Io: return "io";
        case ErrorCategory::Validation: return "validation";
        case ErrorCategory::Shape: return "shape";
        case ErrorCategory::Numerical: return "numerical";
    }
    return "unknown";
}

int exit_code(ErrorCategory category) {
    switch (category) {
        case ErrorCategory::Io: return 2;
        case ErrorCategory::Validation:
        case ErrorCategory::Shape: return 3;
        case ErrorCategory::Numerical: return 4;
    }
    return 1;
}

}  // namespace bpr

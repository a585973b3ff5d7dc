#include "fusecond/error.hpp"

namespace fusecond {

const char* to_string(ErrorCategory category) noexcept {
    switch (category) {
        case ErrorCategory::geometry: return "geometry";
        case ErrorCategory::format: return "format";
        case ErrorCategory::config: return "config";
        case ErrorCategory::parameter: return "parameter";
        case ErrorCategory::lookup: return "lookup";
        case ErrorCategory::fusion: return "fusion";
        case ErrorCategory::model: return "model";
        case ErrorCategory::empty_region: return "empty_region";
        case ErrorCategory::empty_structure: return "empty_structure";
        case ErrorCategory::numeric: return "numeric";
    }
    return "unknown";
}

}  // namespace fusecond

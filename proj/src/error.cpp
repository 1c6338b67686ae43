#include "dfdx/error.hpp"

namespace dfdx {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::invalid_name: return "invalid-name";
    case ErrorKind::unknown_stereotype: return "unknown-stereotype";
    case ErrorKind::applicability: return "applicability";
    case ErrorKind::missing_target: return "missing-target";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::self_flow: return "self-flow";
    case ErrorKind::invariant: return "invariant";
    case ErrorKind::io: return "io";
    case ErrorKind::pattern: return "pattern";
    case ErrorKind::parse: return "parse";
    case ErrorKind::dockerfile: return "dockerfile";
    case ErrorKind::input: return "input";
    case ErrorKind::fatal: return "fatal";
    }
    return "unknown";
}

} // namespace dfdx

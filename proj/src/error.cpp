#include "taa/error.hpp"

namespace taa {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::invalid_world: return "invalid-world";
        case ErrorKind::dimension: return "dimension";
        case ErrorKind::unsupported_size: return "unsupported-size";
        case ErrorKind::invariant_violation: return "invariant-violation";
        case ErrorKind::illegal_move: return "illegal-move";
        case ErrorKind::unknown_node: return "unknown-node";
        case ErrorKind::invalid_goal: return "invalid-goal";
        case ErrorKind::inventory_load: return "inventory-load";
        case ErrorKind::inconsistent_data: return "inconsistent-data";
        case ErrorKind::not_yet_grounded: return "not-yet-grounded";
        case ErrorKind::no_compatible_goal: return "no-compatible-goal";
        case ErrorKind::infeasible_intervention: return "infeasible-intervention";
        case ErrorKind::invalid_config: return "invalid-config";
        case ErrorKind::parse: return "parse";
        case ErrorKind::unknown_sentence: return "unknown-sentence";
    }
    return "unknown";
}

}  // namespace taa

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace taa {

enum class ErrorKind {
    invalid_world,
    dimension,
    unsupported_size,
    invariant_violation,
    illegal_move,
    unknown_node,
    invalid_goal,
    inventory_load,
    inconsistent_data,
    not_yet_grounded,
    no_compatible_goal,
    infeasible_intervention,
    invalid_config,
    parse,
    unknown_sentence,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every failure raised by the library carries a kind so callers (the service in
// particular) can map it onto a status code without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace taa

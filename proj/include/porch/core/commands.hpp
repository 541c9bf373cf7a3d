#pragma once

#include "porch/core/codec.hpp"

#include <string>
#include <variant>

namespace porch {

struct StartStream {
    std::string session_id;
    bool operator==(const StartStream&) const = default;
};
struct StopStream {
    std::string session_id;
    bool operator==(const StopStream&) const = default;
};
struct UpdatePolicy {
    double min_accuracy = 0.8;
    bool operator==(const UpdatePolicy&) const = default;
};

/// Hub-to-edge instruction delivered over the command long-poll.
using EdgeCommand = std::variant<StartStream, StopStream, UpdatePolicy>;

Json to_json(const EdgeCommand& c);
/// Throws ProtocolError.
EdgeCommand command_from_json(const Json& j);

}  // namespace porch

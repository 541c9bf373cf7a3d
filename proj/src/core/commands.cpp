#include "porch/core/commands.hpp"

#include "porch/core/error.hpp"

namespace porch {

namespace {
template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
}  // namespace

Json to_json(const EdgeCommand& c) {
    return std::visit(overloaded{
                          [](const StartStream& s) { return Json{{"type", "start_stream"}, {"session_id", s.session_id}}; },
                          [](const StopStream& s) { return Json{{"type", "stop_stream"}, {"session_id", s.session_id}}; },
                          [](const UpdatePolicy& u) { return Json{{"type", "update_policy"}, {"min_accuracy", u.min_accuracy}}; },
                      },
                      c);
}

EdgeCommand command_from_json(const Json& j) {
    try {
        auto type = j.at("type").get<std::string>();
        if (type == "start_stream" || type == "stop_stream") {
            auto id = j.at("session_id").get<std::string>();
            if (id.empty()) throw Error(ErrorCode::ProtocolError, "session_id");
            if (type == "start_stream") return StartStream{id};
            return StopStream{id};
        }
        if (type == "update_policy") {
            auto m = j.at("min_accuracy").get<double>();
            if (!(m >= 0.0 && m <= 1.0)) throw Error(ErrorCode::ProtocolError, "min_accuracy");
            return UpdatePolicy{m};
        }
        throw Error(ErrorCode::ProtocolError, "type", type);
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ProtocolError, "command", e.what());
    }
}

}  // namespace porch

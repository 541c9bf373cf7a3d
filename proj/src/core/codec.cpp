#include "porch/core/codec.hpp"

#include "porch/core/error.hpp"

#include <fmt/format.h>

#include <cmath>

namespace porch {

std::string format_real(double v) {
    auto s = fmt::format("{:.6f}", quantize(v));
    auto dot = s.find('.');
    if (dot != std::string::npos) {
        while (s.back() == '0') s.pop_back();
        if (s.back() == '.') s.pop_back();
    }
    if (s == "-0") s = "0";
    return s;
}

static void dump_into(const Json& v, std::string& out) {
    switch (v.type()) {
    case Json::value_t::object: {
        // nlohmann's default object_t is std::map, so iteration is already sorted.
        out += '{';
        bool first = true;
        for (const auto& [key, item] : v.items()) {
            if (!first) out += ',';
            first = false;
            out += Json(key).dump();
            out += ':';
            dump_into(item, out);
        }
        out += '}';
        break;
    }
    case Json::value_t::array: {
        out += '[';
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += ',';
            dump_into(v[i], out);
        }
        out += ']';
        break;
    }
    case Json::value_t::number_float:
        out += format_real(v.get<double>());
        break;
    default:
        out += v.dump();
    }
}

std::string canonical_dump(const Json& value) {
    std::string out;
    dump_into(value, out);
    return out;
}

Json to_json(const BoundingBox& b) {
    return Json{{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}};
}

Json to_json(const Detection& d) {
    Json j;
    j["label"] = d.label;
    j["confidence"] = d.confidence;
    j["bbox"] = to_json(d.bbox);
    if (d.identity) {
        Json id{{"known", d.identity->known}};
        id["name"] = d.identity->name ? Json(*d.identity->name) : Json(nullptr);
        j["identity"] = std::move(id);
    } else {
        j["identity"] = nullptr;
    }
    return j;
}

Json to_json(const DetectionEvent& e) {
    Json j;
    j["event_id"] = e.event_id;
    j["device_id"] = e.device_id;
    j["captured_at_ms"] = e.captured_at_ms;
    j["detector_backend"] = e.detector_backend;
    j["motion_score"] = e.motion_score;
    j["snapshot_ref"] = e.snapshot_ref ? Json(*e.snapshot_ref) : Json(nullptr);
    j["detections"] = Json::array();
    for (const auto& d : e.detections) j["detections"].push_back(to_json(d));
    return j;
}

namespace {

const Json& field(const Json& j, const char* name) {
    if (!j.is_object()) throw Error(ErrorCode::MalformedEvent, name, "expected object");
    auto it = j.find(name);
    if (it == j.end()) throw Error(ErrorCode::MalformedEvent, name, "missing field");
    return *it;
}

std::string string_field(const Json& j, const char* name) {
    const auto& v = field(j, name);
    if (!v.is_string()) throw Error(ErrorCode::MalformedEvent, name, "expected string");
    return v.get<std::string>();
}

std::int64_t int_field(const Json& j, const char* name) {
    const auto& v = field(j, name);
    if (!v.is_number_integer()) throw Error(ErrorCode::MalformedEvent, name, "expected integer");
    return v.get<std::int64_t>();
}

double real_field(const Json& j, const char* name) {
    const auto& v = field(j, name);
    if (!v.is_number()) throw Error(ErrorCode::MalformedEvent, name, "expected number");
    return v.get<double>();
}

int small_int(const Json& j, const char* name) {
    auto v = int_field(j, name);
    if (v < INT32_MIN || v > INT32_MAX) throw Error(ErrorCode::InvariantViolation, name);
    return static_cast<int>(v);
}

}  // namespace

BoundingBox bbox_from_json(const Json& j) {
    BoundingBox b{small_int(j, "x"), small_int(j, "y"), small_int(j, "w"), small_int(j, "h")};
    if (b.w <= 0 || b.h <= 0 || b.x < 0 || b.y < 0) throw Error(ErrorCode::InvariantViolation, "bbox");
    return b;
}

Detection detection_from_json(const Json& j) {
    Detection d;
    d.label = string_field(j, "label");
    d.confidence = real_field(j, "confidence");
    d.bbox = bbox_from_json(field(j, "bbox"));
    auto it = j.find("identity");
    if (it != j.end() && !it->is_null()) {
        const auto& id = *it;
        const auto& known = field(id, "known");
        if (!known.is_boolean()) throw Error(ErrorCode::MalformedEvent, "known", "expected boolean");
        Identity ident{known.get<bool>(), std::nullopt};
        auto nit = id.find("name");
        if (nit != id.end() && !nit->is_null()) {
            if (!nit->is_string()) throw Error(ErrorCode::MalformedEvent, "name", "expected string");
            ident.name = nit->get<std::string>();
        }
        d.identity = std::move(ident);
    }
    validate(d);
    return d;
}

DetectionEvent event_from_json(const Json& j) {
    DetectionEvent e;
    e.event_id = string_field(j, "event_id");
    e.device_id = string_field(j, "device_id");
    e.captured_at_ms = int_field(j, "captured_at_ms");
    e.detector_backend = string_field(j, "detector_backend");
    e.motion_score = real_field(j, "motion_score");
    auto it = j.find("snapshot_ref");
    if (it != j.end() && !it->is_null()) {
        if (!it->is_string()) throw Error(ErrorCode::MalformedEvent, "snapshot_ref", "expected string");
        e.snapshot_ref = it->get<std::string>();
    }
    const auto& dets = field(j, "detections");
    if (!dets.is_array()) throw Error(ErrorCode::MalformedEvent, "detections", "expected array");
    for (const auto& d : dets) e.detections.push_back(detection_from_json(d));
    validate(e);
    return e;
}

std::string encode_event(const DetectionEvent& event) {
    return canonical_dump(to_json(event));
}

DetectionEvent decode_event(std::string_view bytes) {
    Json j;
    try {
        j = Json::parse(bytes);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::MalformedEvent, "json", e.what());
    }
    return event_from_json(j);
}

}  // namespace porch

#include "porch/core/query.hpp"

#include "porch/core/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace porch {

void QueryFilter::validate() const {
    if (from_ms && to_ms && !(*from_ms < *to_ms)) throw Error(ErrorCode::BadFilter, "from_ms", "from_ms must be < to_ms");
    if (limit < 1 || limit > kMaxQueryLimit) throw Error(ErrorCode::BadFilter, "limit", "limit must be in [1, 500]");
    if (min_confidence && !(*min_confidence >= 0.0 && *min_confidence <= 1.0))
        throw Error(ErrorCode::BadFilter, "min_confidence", "must be in [0, 1]");
    if (device_id && device_id->empty()) throw Error(ErrorCode::BadFilter, "device_id");
    if (label && label->empty()) throw Error(ErrorCode::BadFilter, "label");
}

bool matches(const QueryFilter& f, const DetectionEvent& e) {
    if (f.device_id && e.device_id != *f.device_id) return false;
    if (f.from_ms && e.captured_at_ms < *f.from_ms) return false;
    if (f.to_ms && e.captured_at_ms >= *f.to_ms) return false;
    const auto& ds = e.detections;
    if (f.label && std::none_of(ds.begin(), ds.end(), [&](const Detection& d) { return d.label == *f.label; }))
        return false;
    if (f.identity_known && std::none_of(ds.begin(), ds.end(), [&](const Detection& d) {
            return d.identity && d.identity->known == *f.identity_known;
        }))
        return false;
    if (f.min_confidence && std::none_of(ds.begin(), ds.end(), [&](const Detection& d) {
            return d.confidence >= *f.min_confidence;
        }))
        return false;
    return true;
}

bool precedes(const EventRecord& a, const EventRecord& b, Order order) noexcept {
    auto ka = std::pair(a.event.captured_at_ms, a.seq);
    auto kb = std::pair(b.event.captured_at_ms, b.seq);
    return order == Order::OldestFirst ? ka < kb : kb < ka;
}

Summary summarize_records(std::span<const EventRecord> records, const QueryFilter& f) {
    Summary s;
    s.from_ms = f.from_ms;
    s.to_ms = f.to_ms;
    s.total_events = records.size();
    for (const auto& r : records) {
        const auto& e = r.event;
        std::vector<std::string_view> labels;
        for (const auto& d : e.detections) {
            if (std::find(labels.begin(), labels.end(), d.label) == labels.end()) labels.push_back(d.label);
            if (d.label == kPersonLabel) {
                if (d.identity && d.identity->known)
                    ++s.known_count;
                else
                    ++s.unknown_count;
            }
        }
        for (auto l : labels) ++s.counts_by_label[std::string(l)];
        if (!s.first_event_ms || e.captured_at_ms < *s.first_event_ms) s.first_event_ms = e.captured_at_ms;
        if (!s.last_event_ms || e.captured_at_ms > *s.last_event_ms) s.last_event_ms = e.captured_at_ms;
    }
    return s;
}

namespace {

Json opt(const std::optional<TimestampMs>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<TimestampMs> opt_int(const Json& j, const char* key) {
    const auto& v = j.at(key);
    if (v.is_null()) return std::nullopt;
    return v.get<TimestampMs>();
}

}  // namespace

Json to_json(const EventRecord& r) {
    auto j = to_json(r.event);
    j["received_at_ms"] = r.received_at_ms;
    j["seq"] = r.seq;
    return j;
}

EventRecord record_from_json(const Json& j) {
    EventRecord r;
    auto ev = j;
    try {
        r.received_at_ms = j.at("received_at_ms").get<TimestampMs>();
        r.seq = j.at("seq").get<std::uint64_t>();
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::MalformedEvent, "record", e.what());
    }
    ev.erase("received_at_ms");
    ev.erase("seq");
    r.event = event_from_json(ev);
    return r;
}

Json to_json(const Summary& s) {
    Json j;
    j["range"] = {{"from_ms", opt(s.from_ms)}, {"to_ms", opt(s.to_ms)}};
    j["total_events"] = s.total_events;
    j["counts_by_label"] = Json::object();
    for (const auto& [k, v] : s.counts_by_label) j["counts_by_label"][k] = v;
    j["known_count"] = s.known_count;
    j["unknown_count"] = s.unknown_count;
    j["first_event_ms"] = opt(s.first_event_ms);
    j["last_event_ms"] = opt(s.last_event_ms);
    return j;
}

Summary summary_from_json(const Json& j) {
    try {
        Summary s;
        s.from_ms = opt_int(j.at("range"), "from_ms");
        s.to_ms = opt_int(j.at("range"), "to_ms");
        s.total_events = j.at("total_events").get<std::size_t>();
        for (const auto& [k, v] : j.at("counts_by_label").items()) s.counts_by_label[k] = v.get<std::size_t>();
        s.known_count = j.at("known_count").get<std::size_t>();
        s.unknown_count = j.at("unknown_count").get<std::size_t>();
        s.first_event_ms = opt_int(j, "first_event_ms");
        s.last_event_ms = opt_int(j, "last_event_ms");
        return s;
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ProtocolError, "summary", e.what());
    }
}

std::string to_string(Order o) { return o == Order::NewestFirst ? "newest-first" : "oldest-first"; }

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& s) {
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty()) throw Error(ErrorCode::BadFilter, key, "not a number: " + s);
    return v;
}

double parse_real(const std::string& key, const std::string& s) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::BadFilter, key, "not a number: " + s);
    }
}

}  // namespace

QueryFilter filter_from_params(const std::map<std::string, std::string>& params) {
    QueryFilter f;
    for (const auto& [k, v] : params) {
        if (k == "device_id" || k == "device")
            f.device_id = v;
        else if (k == "from_ms" || k == "from")
            f.from_ms = parse_number<TimestampMs>(k, v);
        else if (k == "to_ms" || k == "to")
            f.to_ms = parse_number<TimestampMs>(k, v);
        else if (k == "label")
            f.label = v;
        else if (k == "identity_known") {
            if (v == "true" || v == "1")
                f.identity_known = true;
            else if (v == "false" || v == "0")
                f.identity_known = false;
            else
                throw Error(ErrorCode::BadFilter, k, "expected true or false");
        } else if (k == "min_confidence")
            f.min_confidence = parse_real(k, v);
        else if (k == "limit") {
            auto n = parse_number<long long>(k, v);
            if (n < 1 || n > static_cast<long long>(kMaxQueryLimit)) throw Error(ErrorCode::BadFilter, "limit", "limit must be in [1, 500]");
            f.limit = static_cast<std::size_t>(n);
        } else if (k == "order") {
            if (v == "newest-first" || v == "newest")
                f.order = Order::NewestFirst;
            else if (v == "oldest-first" || v == "oldest")
                f.order = Order::OldestFirst;
            else
                throw Error(ErrorCode::BadFilter, k, "expected newest-first or oldest-first");
        } else
            throw Error(ErrorCode::BadFilter, k, "unknown parameter");
    }
    f.validate();
    return f;
}

std::map<std::string, std::string> to_params(const QueryFilter& f) {
    std::map<std::string, std::string> p;
    if (f.device_id) p["device_id"] = *f.device_id;
    if (f.from_ms) p["from_ms"] = std::to_string(*f.from_ms);
    if (f.to_ms) p["to_ms"] = std::to_string(*f.to_ms);
    if (f.label) p["label"] = *f.label;
    if (f.identity_known) p["identity_known"] = *f.identity_known ? "true" : "false";
    if (f.min_confidence) p["min_confidence"] = format_real(*f.min_confidence);
    p["limit"] = std::to_string(f.limit);
    p["order"] = to_string(f.order);
    return p;
}

std::string url_encode(std::string_view s) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += kHex[c >> 4];
            out += kHex[c & 15];
        }
    }
    return out;
}

std::string to_query_string(const QueryFilter& f) {
    std::string out;
    for (const auto& [k, v] : to_params(f)) {
        out += out.empty() ? "?" : "&";
        out += k + "=" + url_encode(v);
    }
    return out;
}

}  // namespace porch

#include "porch/detectors/registry.hpp"

#include "porch/core/error.hpp"
#include "porch/detectors/remote.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <set>

namespace porch::detectors {

void validate(const DetectorDescriptor& d) {
    if (d.name.empty()) throw Error(ErrorCode::BadConfig, "name");
    if (!(d.cost_per_call >= 0.0)) throw Error(ErrorCode::BadConfig, "cost_per_call");
    if (!(d.accuracy_score >= 0.0 && d.accuracy_score <= 1.0)) throw Error(ErrorCode::BadConfig, "accuracy_score");
    if (d.kind == BackendKind::Remote && d.endpoint.empty()) throw Error(ErrorCode::BadConfig, "endpoint");
}

DetectorDescriptor descriptor_from_json(const Json& j) {
    DetectorDescriptor d;
    try {
        d.name = j.at("name").get<std::string>();
        d.cost_per_call = j.value("cost_per_call", 0.0);
        d.accuracy_score = j.at("accuracy_score").get<double>();
        auto kind = j.value("kind", std::string("local"));
        if (kind == "local") d.kind = BackendKind::Local;
        else if (kind == "remote") d.kind = BackendKind::Remote;
        else throw Error(ErrorCode::BadConfig, "kind", kind);
        d.endpoint = j.value("endpoint", std::string());
        d.available = j.value("available", true);
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::BadConfig, "registry", e.what());
    }
    validate(d);
    return d;
}

Json to_json(const DetectorDescriptor& d) {
    Json j{{"name", d.name},
           {"cost_per_call", d.cost_per_call},
           {"accuracy_score", d.accuracy_score},
           {"kind", d.kind == BackendKind::Local ? "local" : "remote"},
           {"available", d.available}};
    if (d.kind == BackendKind::Remote) j["endpoint"] = d.endpoint;
    return j;
}

const DetectorDescriptor& select_backend(std::span<const DetectorDescriptor> registry, const SelectionPolicy& policy) {
    const DetectorDescriptor* cheapest = nullptr;
    const DetectorDescriptor* most_accurate = nullptr;
    for (const auto& d : registry) {
        if (!d.available) continue;
        if (d.accuracy_score >= policy.min_accuracy &&
            (!cheapest || d.cost_per_call < cheapest->cost_per_call ||
             (d.cost_per_call == cheapest->cost_per_call && d.name < cheapest->name)))
            cheapest = &d;
        if (!most_accurate || d.accuracy_score > most_accurate->accuracy_score ||
            (d.accuracy_score == most_accurate->accuracy_score && d.name < most_accurate->name))
            most_accurate = &d;
    }
    if (cheapest) return *cheapest;
    if (most_accurate) return *most_accurate;
    throw Error(ErrorCode::NoBackendAvailable, "registry");
}

BackendRegistry::BackendRegistry(SelectionPolicy policy) : policy_(policy) {}

void BackendRegistry::add(DetectorDescriptor descriptor, std::shared_ptr<DetectorBackend> backend) {
    validate(descriptor);
    if (!backend) throw Error(ErrorCode::BadConfig, "backend");
    std::lock_guard lock(mutex_);
    for (const auto& e : entries_)
        if (e.descriptor.name == descriptor.name) throw Error(ErrorCode::BadConfig, "name", "duplicate " + descriptor.name);
    entries_.push_back({std::move(descriptor), std::move(backend)});
}

std::vector<DetectorDescriptor> BackendRegistry::descriptors() const {
    std::lock_guard lock(mutex_);
    std::vector<DetectorDescriptor> out;
    for (const auto& e : entries_) out.push_back(e.descriptor);
    return out;
}

std::size_t BackendRegistry::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

SelectionPolicy BackendRegistry::policy() const {
    std::lock_guard lock(mutex_);
    return policy_;
}

void BackendRegistry::set_policy(SelectionPolicy policy) {
    if (!(policy.min_accuracy >= 0.0 && policy.min_accuracy <= 1.0)) throw Error(ErrorCode::BadConfig, "min_accuracy");
    std::lock_guard lock(mutex_);
    policy_ = policy;
}

void BackendRegistry::set_available(const std::string& name, bool available) {
    std::lock_guard lock(mutex_);
    for (auto& e : entries_)
        if (e.descriptor.name == name) e.descriptor.available = available;
}

DetectOutcome BackendRegistry::detect_with_fallback(const Frame& frame) {
    std::set<std::string> tried;
    for (;;) {
        std::string name;
        std::shared_ptr<DetectorBackend> backend;
        {
            std::lock_guard lock(mutex_);
            std::vector<DetectorDescriptor> candidates;
            for (const auto& e : entries_)
                if (!tried.contains(e.descriptor.name)) candidates.push_back(e.descriptor);
            const auto& chosen = select_backend(candidates, policy_);
            name = chosen.name;
            for (const auto& e : entries_)
                if (e.descriptor.name == name) backend = e.backend;
        }
        tried.insert(name);
        try {
            auto detections = backend->detect(frame);
            for (const auto& d : detections) validate(d, frame.width, frame.height);
            return {std::move(detections), name};
        } catch (const std::exception& e) {
            spdlog::warn("detector '{}' failed, marking unavailable: {}", name, e.what());
            set_available(name, false);
        }
    }
}

std::size_t BackendRegistry::probe_health(TimestampMs now_ms, TimestampMs interval_ms) {
    std::vector<std::pair<std::string, std::shared_ptr<DetectorBackend>>> down;
    {
        std::lock_guard lock(mutex_);
        if (last_probe_ms_ && now_ms - *last_probe_ms_ < interval_ms) return 0;
        last_probe_ms_ = now_ms;
        for (const auto& e : entries_)
            if (!e.descriptor.available) down.emplace_back(e.descriptor.name, e.backend);
    }
    std::size_t revived = 0;
    for (auto& [name, backend] : down) {
        bool ok = false;
        try {
            ok = backend->healthy();
        } catch (const std::exception&) {
        }
        if (ok) {
            set_available(name, true);
            ++revived;
            spdlog::info("detector '{}' healthy again", name);
        }
    }
    return revived;
}

std::unique_ptr<BackendRegistry> load_registry(const Json& list, const Palette& palette, SelectionPolicy policy) {
    if (!list.is_array()) throw Error(ErrorCode::BadConfig, "registry", "expected a JSON list");
    auto registry = std::make_unique<BackendRegistry>(policy);
    for (const auto& j : list) {
        auto d = descriptor_from_json(j);
        std::shared_ptr<DetectorBackend> backend;
        if (d.kind == BackendKind::Local) backend = std::make_shared<PaletteBackend>(palette);
        else backend = std::make_shared<RemoteBackend>(d.endpoint);
        registry->add(std::move(d), std::move(backend));
    }
    return registry;
}

std::unique_ptr<BackendRegistry> load_registry(const std::filesystem::path& path, const Palette& palette,
                                               SelectionPolicy policy) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::BadConfig, "registry", "cannot open " + path.string());
    try {
        return load_registry(Json::parse(in), palette, policy);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::BadConfig, "registry", e.what());
    }
}

}  // namespace porch::detectors

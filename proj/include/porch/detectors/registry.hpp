#pragma once

#include "porch/core/clock.hpp"
#include "porch/detectors/backend.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace porch::detectors {

struct SelectionPolicy {
    double min_accuracy = 0.8;
};

inline constexpr TimestampMs kHealthProbeIntervalMs = 10'000;

/// Cheapest available backend with accuracy >= min_accuracy (ties by name);
/// otherwise the most accurate available one (ties by name). Throws
/// NoBackendAvailable when nothing is available.
const DetectorDescriptor& select_backend(std::span<const DetectorDescriptor> registry, const SelectionPolicy& policy);

struct DetectOutcome {
    std::vector<Detection> detections;
    std::string backend;
};

/// Descriptors plus live backends. Reads are shared; health flips and policy
/// updates are serialized.
class BackendRegistry {
public:
    explicit BackendRegistry(SelectionPolicy policy = {});

    /// Throws BadConfig on duplicate name or an invalid descriptor.
    void add(DetectorDescriptor descriptor, std::shared_ptr<DetectorBackend> backend);

    std::vector<DetectorDescriptor> descriptors() const;
    std::size_t size() const;
    bool empty() const { return size() == 0; }

    SelectionPolicy policy() const;
    void set_policy(SelectionPolicy policy);
    void set_available(const std::string& name, bool available);

    /// Selects per the policy and invokes. A failing backend is marked
    /// unavailable and selection repeats; no backend is tried twice.
    DetectOutcome detect_with_fallback(const Frame& frame);

    /// Re-probes unavailable backends if the probe interval has elapsed since
    /// the last probe. Returns how many came back.
    std::size_t probe_health(TimestampMs now_ms, TimestampMs interval_ms = kHealthProbeIntervalMs);

private:
    struct Entry {
        DetectorDescriptor descriptor;
        std::shared_ptr<DetectorBackend> backend;
    };

    mutable std::mutex mutex_;
    std::vector<Entry> entries_;
    SelectionPolicy policy_;
    std::optional<TimestampMs> last_probe_ms_;
};

/// Builds a registry from the JSON registry file. Local descriptors get a
/// PaletteBackend over `palette`; remote ones a RemoteBackend.
std::unique_ptr<BackendRegistry> load_registry(const Json& list, const Palette& palette, SelectionPolicy policy);
std::unique_ptr<BackendRegistry> load_registry(const std::filesystem::path& path, const Palette& palette,
                                               SelectionPolicy policy);

}  // namespace porch::detectors

#pragma once

#include <filesystem>
#include <optional>
#include <string>

namespace porch::hub {

/// Content-addressed snapshot storage: one file per SHA-256.
class BlobStore {
public:
    explicit BlobStore(std::filesystem::path dir, bool durable = true);

    /// Returns the hex digest. Writing the same bytes twice is a no-op.
    std::string put(const std::string& bytes);
    std::optional<std::string> get(const std::string& digest) const;
    bool contains(const std::string& digest) const;

private:
    std::filesystem::path path_for(const std::string& digest) const;

    std::filesystem::path dir_;
    bool durable_;
};

}  // namespace porch::hub

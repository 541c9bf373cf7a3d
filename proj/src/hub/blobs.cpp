#include "porch/hub/blobs.hpp"

#include "porch/core/crypto.hpp"
#include "porch/core/error.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

namespace porch::hub {

namespace {

bool is_digest(const std::string& s) {
    return s.size() == 64 && std::all_of(s.begin(), s.end(), [](char c) {
               return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
           });
}

}  // namespace

BlobStore::BlobStore(std::filesystem::path dir, bool durable) : dir_(std::move(dir)), durable_(durable) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path BlobStore::path_for(const std::string& digest) const {
    return dir_ / digest.substr(0, 2) / digest;
}

std::string BlobStore::put(const std::string& bytes) {
    auto digest = crypto::sha256_hex(bytes);
    auto path = path_for(digest);
    if (std::filesystem::exists(path)) return digest;
    std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp-" + crypto::to_hex(crypto::random_bytes(6));
    int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw Error(ErrorCode::HubError, "blob", std::strerror(errno));
    std::size_t off = 0;
    while (off < bytes.size()) {
        auto n = ::write(fd, bytes.data() + off, bytes.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            ::close(fd);
            throw Error(ErrorCode::HubError, "blob", std::strerror(errno));
        }
        off += static_cast<std::size_t>(n);
    }
    if (durable_) ::fdatasync(fd);
    ::close(fd);
    std::filesystem::rename(tmp, path);
    return digest;
}

std::optional<std::string> BlobStore::get(const std::string& digest) const {
    if (!is_digest(digest)) return std::nullopt;
    std::ifstream in(path_for(digest), std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool BlobStore::contains(const std::string& digest) const {
    return is_digest(digest) && std::filesystem::exists(path_for(digest));
}

}  // namespace porch::hub

#include "porch/core/record_log.hpp"

#include "porch/core/crypto.hpp"
#include "porch/core/error.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <iterator>
#include <system_error>

namespace porch {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

std::uint32_t get_u32(const std::string& s, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(s[at + i])) << (8 * i);
    return v;
}

void write_all(int fd, std::string_view data) {
    while (!data.empty()) {
        auto n = ::write(fd, data.data(), data.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            throw std::system_error(errno, std::generic_category(), "write");
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
}

}  // namespace

std::string frame_record(std::string_view payload) {
    std::string out;
    out.reserve(payload.size() + 8);
    put_u32(out, static_cast<std::uint32_t>(payload.size()));
    out.append(payload);
    put_u32(out, crypto::crc32(crypto::as_bytes(payload)));
    return out;
}

RecordLog::Contents RecordLog::read(const std::filesystem::path& path) {
    Contents out;
    std::ifstream in(path, std::ios::binary);
    if (!in) return out;
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (data.empty()) return out;
    if (data.size() < kRecordLogMagic.size()) {
        out.torn_tail = true;
        return out;
    }
    if (data.compare(0, kRecordLogMagic.size(), kRecordLogMagic) != 0)
        throw Error(ErrorCode::OutboxCorrupt, "magic", path.string());
    std::size_t at = kRecordLogMagic.size();
    while (at < data.size()) {
        if (data.size() - at < 4) {
            out.torn_tail = true;
            break;
        }
        auto len = get_u32(data, at);
        if (data.size() - at - 4 < static_cast<std::size_t>(len) + 4) {
            out.torn_tail = true;
            break;
        }
        std::string payload = data.substr(at + 4, len);
        if (get_u32(data, at + 4 + len) != crypto::crc32(crypto::as_bytes(payload)))
            throw Error(ErrorCode::OutboxCorrupt, "crc32", path.string());
        out.records.push_back(std::move(payload));
        at += 8 + len;
    }
    return out;
}

RecordLog::RecordLog(std::filesystem::path path, bool durable) : path_(std::move(path)), durable_(durable) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    open_for_append();
}

RecordLog::~RecordLog() {
    if (fd_ >= 0) ::close(fd_);
}

void RecordLog::open_for_append() {
    fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw std::system_error(errno, std::generic_category(), "open " + path_.string());
    if (::lseek(fd_, 0, SEEK_END) == 0) {
        write_all(fd_, kRecordLogMagic);
        if (durable_) ::fdatasync(fd_);
    }
}

void RecordLog::append(std::string_view payload) {
    write_all(fd_, frame_record(payload));
    if (durable_) ::fdatasync(fd_);
}

void RecordLog::rewrite(const std::vector<std::string>& records) {
    auto tmp = path_;
    tmp += ".tmp";
    int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw std::system_error(errno, std::generic_category(), "open " + tmp.string());
    std::string buf(kRecordLogMagic);
    for (const auto& r : records) buf += frame_record(r);
    write_all(fd, buf);
    ::fsync(fd);
    ::close(fd);
    std::filesystem::rename(tmp, path_);
    ::close(fd_);
    fd_ = -1;
    open_for_append();
}

std::filesystem::path RecordLog::quarantine(const std::filesystem::path& path) {
    for (int n = 0;; ++n) {
        auto target = path;
        target += ".corrupt-" + std::to_string(n);
        if (!std::filesystem::exists(target)) {
            std::filesystem::rename(path, target);
            return target;
        }
    }
}

}  // namespace porch

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace porch {

inline constexpr std::string_view kRecordLogMagic = "PODB1";

/// Append-only file of framed records: magic "PODB1", then repeated
/// [u32 length | payload | u32 CRC32(payload)], little-endian.
class RecordLog {
public:
    struct Contents {
        std::vector<std::string> records;
        /// An incomplete final record (crash mid-append) was ignored.
        bool torn_tail = false;
    };

    /// Reads every record. A missing file yields no records. Throws
    /// OutboxCorrupt on a bad magic or a checksum mismatch.
    static Contents read(const std::filesystem::path& path);

    /// Opens (creating if needed) for appending. With `durable`, every append
    /// is fsync'ed before returning.
    RecordLog(std::filesystem::path path, bool durable = true);
    ~RecordLog();

    RecordLog(const RecordLog&) = delete;
    RecordLog& operator=(const RecordLog&) = delete;

    void append(std::string_view payload);

    /// Atomically replaces the file with exactly `records`.
    void rewrite(const std::vector<std::string>& records);

    const std::filesystem::path& path() const noexcept { return path_; }

    /// Renames a damaged file aside (suffix ".corrupt-<n>") and returns the new name.
    static std::filesystem::path quarantine(const std::filesystem::path& path);

private:
    void open_for_append();

    std::filesystem::path path_;
    bool durable_;
    int fd_ = -1;
};

std::string frame_record(std::string_view payload);

}  // namespace porch

#pragma once

#include "porch/core/clock.hpp"
#include "porch/core/crypto.hpp"

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace httplib {
class Client;
}

namespace porch::net {

struct SplitUrl {
    std::string origin;  // scheme://host:port
    std::string prefix;  // path prefix, no trailing slash
};
SplitUrl split_url(const std::string& url);

struct MultipartPart {
    std::string name;
    std::string content_type;
    std::string content;
};

/// multipart/mixed body with form-data style part headers.
std::string build_multipart(const std::vector<MultipartPart>& parts, const std::string& boundary);
/// Parses a body whose Content-Type carries `boundary=`. Returns nullopt when
/// the structure is broken.
std::optional<std::map<std::string, MultipartPart>> parse_multipart(std::string_view body, std::string_view content_type);

struct HttpResult {
    int status = 0;  // 0: transport failure
    std::string body;
    std::string content_type;
    std::string error;

    bool ok() const noexcept { return status >= 200 && status < 300; }
    bool transport_failed() const noexcept { return status == 0; }
};

/// Thin blocking client. Each call uses its own connection so a client can
/// be shared across threads.
class HttpClient {
public:
    explicit HttpClient(std::string base_url, std::chrono::milliseconds timeout = std::chrono::seconds(10));
    virtual ~HttpClient() = default;

    void set_bearer_token(std::string token) { bearer_ = std::move(token); }
    const std::string& base_url() const noexcept { return base_url_; }

    /// `target` is path plus optional query, relative to the base URL.
    HttpResult request(std::string_view method, const std::string& target, const std::string& body = {},
                       const std::string& content_type = {}, std::optional<std::chrono::milliseconds> timeout = {},
                       const std::map<std::string, std::string>& headers = {}) const;

    /// GET whose body is handed over as it arrives; `on_chunk` returns false
    /// to stop early. A stop requested by the callback is not a failure.
    HttpResult stream(const std::string& target, const std::function<bool(std::string_view)>& on_chunk,
                      std::optional<std::chrono::milliseconds> timeout = {},
                      const std::map<std::string, std::string>& headers = {}) const;

    /// Full path as it goes on the wire (base prefix + target).
    std::string wire_path(const std::string& target) const { return url_.prefix + target; }

protected:
    std::string base_url_;
    SplitUrl url_;
    std::chrono::milliseconds timeout_;
    std::string bearer_;
};

struct SseEvent {
    std::string id;
    std::string event = "message";
    std::string data;

    bool operator==(const SseEvent&) const = default;
};

/// Incremental text/event-stream decoder.
class SseParser {
public:
    std::vector<SseEvent> feed(std::string_view chunk);

private:
    std::string buffer_;
    SseEvent current_;
    bool has_fields_ = false;
    bool has_data_ = false;
};

/// Client for device calls: adds X-Device-Id / X-Timestamp / X-Nonce /
/// X-Signature over the exact method, wire path and body bytes.
class SignedClient : public HttpClient {
public:
    SignedClient(std::string base_url, std::string device_id, crypto::Bytes secret,
                 std::shared_ptr<const Clock> clock = std::make_shared<SystemClock>(),
                 std::chrono::milliseconds timeout = std::chrono::seconds(10));

    HttpResult signed_request(std::string_view method, const std::string& target, const std::string& body = {},
                              const std::string& content_type = {},
                              std::optional<std::chrono::milliseconds> timeout = {}) const;

    /// Signature headers for a request, exposed for tests that tamper with them.
    std::map<std::string, std::string> signature_headers(std::string_view method, const std::string& target,
                                                         std::string_view body) const;

    const std::string& device_id() const noexcept { return device_id_; }

private:
    std::string device_id_;
    crypto::Bytes secret_;
    std::shared_ptr<const Clock> clock_;
};

}  // namespace porch::net

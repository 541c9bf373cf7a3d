#include "porch/net/http.hpp"

#include "porch/core/signing.hpp"

#include <httplib.h>

namespace porch::net {

SplitUrl split_url(const std::string& url) {
    auto scheme = url.find("://");
    auto path_at = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    SplitUrl out;
    out.origin = url.substr(0, path_at);
    if (path_at != std::string::npos) out.prefix = url.substr(path_at);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
    return out;
}

std::string build_multipart(const std::vector<MultipartPart>& parts, const std::string& boundary) {
    std::string body;
    for (const auto& p : parts) {
        body += "--" + boundary + "\r\n";
        body += "Content-Disposition: form-data; name=\"" + p.name + "\"\r\n";
        if (!p.content_type.empty()) body += "Content-Type: " + p.content_type + "\r\n";
        body += "\r\n";
        body += p.content;
        body += "\r\n";
    }
    body += "--" + boundary + "--\r\n";
    return body;
}

std::optional<std::map<std::string, MultipartPart>> parse_multipart(std::string_view body, std::string_view content_type) {
    auto at = content_type.find("boundary=");
    if (at == std::string_view::npos) return std::nullopt;
    auto boundary = std::string(content_type.substr(at + 9));
    if (auto semi = boundary.find(';'); semi != std::string::npos) boundary.resize(semi);
    if (boundary.size() >= 2 && boundary.front() == '"' && boundary.back() == '"')
        boundary = boundary.substr(1, boundary.size() - 2);
    if (boundary.empty()) return std::nullopt;

    const std::string delim = "--" + boundary;
    const std::string next = "\r\n" + delim;
    std::map<std::string, MultipartPart> parts;
    if (body.substr(0, delim.size()) != delim) return std::nullopt;
    std::size_t pos = delim.size();
    for (;;) {
        if (body.substr(pos, 2) == "--") return parts;
        if (body.substr(pos, 2) != "\r\n") return std::nullopt;
        pos += 2;
        auto header_end = body.find("\r\n\r\n", pos);
        if (header_end == std::string_view::npos) return std::nullopt;
        MultipartPart part;
        auto headers = body.substr(pos, header_end - pos);
        std::size_t line_start = 0;
        while (line_start <= headers.size()) {
            auto line_end = headers.find("\r\n", line_start);
            auto line = headers.substr(line_start, line_end == std::string_view::npos ? std::string_view::npos
                                                                                        : line_end - line_start);
            auto colon = line.find(':');
            if (colon != std::string_view::npos) {
                std::string key(line.substr(0, colon));
                for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
                auto value = line.substr(colon + 1);
                while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
                if (key == "content-type") part.content_type = value;
                if (key == "content-disposition") {
                    auto n = value.find("name=\"");
                    if (n != std::string_view::npos) {
                        auto close = value.find('"', n + 6);
                        if (close == std::string_view::npos) return std::nullopt;
                        part.name = value.substr(n + 6, close - n - 6);
                    }
                }
            }
            if (line_end == std::string_view::npos) break;
            line_start = line_end + 2;
        }
        pos = header_end + 4;
        auto end = body.find(next, pos);
        if (end == std::string_view::npos) return std::nullopt;
        part.content = body.substr(pos, end - pos);
        if (part.name.empty()) return std::nullopt;
        parts[part.name] = std::move(part);
        pos = end + next.size();
    }
}

HttpClient::HttpClient(std::string base_url, std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), url_(split_url(base_url_)), timeout_(timeout) {}

HttpResult HttpClient::request(std::string_view method, const std::string& target, const std::string& body,
                               const std::string& content_type, std::optional<std::chrono::milliseconds> timeout,
                               const std::map<std::string, std::string>& headers) const {
    httplib::Client client(url_.origin);
    auto t = timeout.value_or(timeout_);
    client.set_connection_timeout(std::min(t, std::chrono::milliseconds(5000)));
    client.set_read_timeout(t);
    client.set_write_timeout(t);
    client.set_url_encode(false);
    client.set_keep_alive(false);

    httplib::Request req;
    req.method = std::string(method);
    req.path = wire_path(target);
    for (const auto& [k, v] : headers) req.headers.emplace(k, v);
    if (!bearer_.empty()) req.headers.emplace("Authorization", "Bearer " + bearer_);
    if (!body.empty() || method == "POST" || method == "PUT") {
        req.body = body;
        req.headers.emplace("Content-Type", content_type.empty() ? "application/octet-stream" : content_type);
    }
    auto res = client.send(req);
    HttpResult out;
    if (!res) {
        out.error = httplib::to_string(res.error());
        return out;
    }
    out.status = res->status;
    out.body = std::move(res->body);
    out.content_type = res->get_header_value("Content-Type");
    return out;
}

HttpResult HttpClient::stream(const std::string& target, const std::function<bool(std::string_view)>& on_chunk,
                              std::optional<std::chrono::milliseconds> timeout,
                              const std::map<std::string, std::string>& headers) const {
    httplib::Client client(url_.origin);
    auto t = timeout.value_or(timeout_);
    client.set_connection_timeout(std::min(t, std::chrono::milliseconds(5000)));
    client.set_read_timeout(t);
    client.set_url_encode(false);
    client.set_keep_alive(false);
    httplib::Headers hs;
    for (const auto& [k, v] : headers) hs.emplace(k, v);
    if (!bearer_.empty()) hs.emplace("Authorization", "Bearer " + bearer_);
    bool stopped = false;
    std::string error_body;
    int status = 0;
    auto res = client.Get(
        wire_path(target), hs,
        [&](const httplib::Response& r) {
            status = r.status;
            return true;
        },
        [&](const char* data, std::size_t len) {
            if (status != 200) {
                error_body.append(data, len);
                return true;
            }
            if (!on_chunk(std::string_view(data, len))) {
                stopped = true;
                return false;
            }
            return true;
        });
    HttpResult out;
    out.status = status;
    if (status != 200) out.body = std::move(error_body);
    if (!res && !stopped) {
        out.error = httplib::to_string(res.error());
        if (status == 0) out.status = 0;
    }
    return out;
}

std::vector<SseEvent> SseParser::feed(std::string_view chunk) {
    buffer_.append(chunk);
    std::vector<SseEvent> out;
    std::size_t start = 0;
    for (;;) {
        auto nl = buffer_.find('\n', start);
        if (nl == std::string::npos) break;
        std::string_view line(buffer_.data() + start, nl - start);
        start = nl + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) {
            if (has_fields_) out.push_back(std::move(current_));
            current_ = SseEvent{};
            has_fields_ = has_data_ = false;
            continue;
        }
        if (line.front() == ':') continue;
        auto colon = line.find(':');
        auto field = line.substr(0, colon);
        std::string_view value = colon == std::string_view::npos ? std::string_view{} : line.substr(colon + 1);
        if (!value.empty() && value.front() == ' ') value.remove_prefix(1);
        if (field == "data") {
            if (has_data_) current_.data += '\n';
            current_.data += value;
            has_data_ = true;
            has_fields_ = true;
        } else if (field == "event") {
            current_.event = value;
            has_fields_ = true;
        } else if (field == "id") {
            current_.id = value;
            has_fields_ = true;
        }
    }
    buffer_.erase(0, start);
    return out;
}

SignedClient::SignedClient(std::string base_url, std::string device_id, crypto::Bytes secret,
                           std::shared_ptr<const Clock> clock, std::chrono::milliseconds timeout)
    : HttpClient(std::move(base_url), timeout),
      device_id_(std::move(device_id)),
      secret_(std::move(secret)),
      clock_(std::move(clock)) {}

std::map<std::string, std::string> SignedClient::signature_headers(std::string_view method, const std::string& target,
                                                                   std::string_view body) const {
    auto signed_req =
        sign_request(device_id_, secret_, method, wire_path(target), body, clock_->now_ms(), make_nonce());
    return {{std::string(kHeaderDeviceId), signed_req.device_id},
            {std::string(kHeaderTimestamp), std::to_string(signed_req.timestamp_ms)},
            {std::string(kHeaderNonce), signed_req.nonce},
            {std::string(kHeaderSignature), signed_req.signature}};
}

HttpResult SignedClient::signed_request(std::string_view method, const std::string& target, const std::string& body,
                                        const std::string& content_type,
                                        std::optional<std::chrono::milliseconds> timeout) const {
    return request(method, target, body, content_type, timeout, signature_headers(method, target, body));
}

}  // namespace porch::net

#include "porch/detectors/remote.hpp"

#include "porch/core/crypto.hpp"
#include "porch/core/error.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace porch::detectors {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host:port
    std::string prefix;  // path prefix without trailing slash
};

SplitUrl split_url(const std::string& url) {
    auto scheme = url.find("://");
    auto path_at = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    SplitUrl out;
    out.origin = url.substr(0, path_at);
    if (path_at != std::string::npos) out.prefix = url.substr(path_at);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
    return out;
}

}  // namespace

Json detect_request_json(const Frame& frame) {
    return Json{{"width", frame.width}, {"height", frame.height}, {"pixels_b64", crypto::base64_encode(frame.pixels)}};
}

Frame frame_from_request_json(const Json& j) {
    try {
        Frame f;
        f.width = j.at("width").get<int>();
        f.height = j.at("height").get<int>();
        f.pixels = crypto::base64_decode(j.at("pixels_b64").get<std::string>());
        f.validate();
        return f;
    } catch (const Error& e) {
        throw Error(ErrorCode::ProtocolError, e.detail(), e.what());
    } catch (const std::exception& e) {
        throw Error(ErrorCode::ProtocolError, "request", e.what());
    }
}

std::vector<Detection> parse_detect_response(std::string_view body, const Frame& frame) {
    try {
        auto j = Json::parse(body);
        std::vector<Detection> out;
        for (const auto& dj : j.at("detections")) {
            auto d = detection_from_json(dj);
            validate(d, frame.width, frame.height);
            out.push_back(std::move(d));
        }
        return out;
    } catch (const Error& e) {
        throw Error(ErrorCode::ProtocolError, e.detail(), e.what());
    } catch (const std::exception& e) {
        throw Error(ErrorCode::ProtocolError, "response", e.what());
    }
}

std::vector<Detection> remote_detect(const std::string& endpoint, const Frame& frame,
                                     std::chrono::milliseconds timeout) {
    auto url = split_url(endpoint);
    httplib::Client client(url.origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto started = std::chrono::steady_clock::now();
    auto res = client.Post(url.prefix + "/detect", detect_request_json(frame).dump(), "application/json");
    if (!res) {
        auto elapsed = std::chrono::steady_clock::now() - started;
        auto err = res.error();
        if (err == httplib::Error::Connection || err == httplib::Error::ConnectionTimeout ||
            err == httplib::Error::BindIPAddress)
            throw Error(ErrorCode::Unreachable, endpoint, httplib::to_string(err));
        if (elapsed >= timeout * 9 / 10) throw Error(ErrorCode::Timeout, endpoint, httplib::to_string(err));
        throw Error(ErrorCode::Unreachable, endpoint, httplib::to_string(err));
    }
    if (res->status != 200)
        throw Error(ErrorCode::ProtocolError, "status", std::to_string(res->status));
    return parse_detect_response(res->body, frame);
}

bool RemoteBackend::healthy() {
    auto url = split_url(endpoint_);
    httplib::Client client(url.origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    auto res = client.Get(url.prefix + "/health");
    return res && res->status == 200;
}

DetectorServer::DetectorServer(std::shared_ptr<DetectorBackend> backend)
    : backend_(std::move(backend)), server_(std::make_unique<httplib::Server>()) {
    server_->Post("/detect", [this](const httplib::Request& req, httplib::Response& res) {
        try {
            auto frame = frame_from_request_json(Json::parse(req.body));
            Json out{{"detections", Json::array()}};
            for (const auto& d : backend_->detect(frame)) out["detections"].push_back(to_json(d));
            res.set_content(out.dump(), "application/json");
        } catch (const Json::exception& e) {
            res.status = 400;
            res.set_content(Json{{"error", {{"code", "ProtocolError"}, {"message", e.what()}}}}.dump(),
                            "application/json");
        } catch (const Error& e) {
            res.status = 400;
            res.set_content(Json{{"error", {{"code", to_string(e.code())}, {"message", e.what()}}}}.dump(),
                            "application/json");
        }
    });
    server_->Get("/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"status\":\"ok\"}", "application/json");
    });
}

DetectorServer::~DetectorServer() {
    stop();
}

int DetectorServer::start(const std::string& host, int port) {
    host_ = host;
    port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
    if (port_ < 0) throw Error(ErrorCode::BadConfig, "port", "cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port_;
}

void DetectorServer::listen(const std::string& host, int port) {
    host_ = host;
    port_ = port;
    spdlog::info("detector serving on {}:{}", host, port);
    if (!server_->listen(host, port)) throw Error(ErrorCode::BadConfig, "port", "cannot bind");
}

void DetectorServer::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

std::string DetectorServer::endpoint() const {
    return "http://" + host_ + ":" + std::to_string(port_);
}

}  // namespace porch::detectors

#pragma once

// Loopback HTTP forwarder that keeps a copy of every exchange. Sits between
// an edge agent and the hub so tests can see exactly what the edge sent.

#include <httplib.h>

#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace porch::testing {

struct Exchange {
    std::string method;
    std::string target;
    std::string request_body;
    int status = 0;
    std::string response_body;
};

class RecordingProxy {
public:
    explicit RecordingProxy(std::string upstream_host, int upstream_port)
        : host_(std::move(upstream_host)), port_(upstream_port) {
        auto forward = [this](const httplib::Request& req, httplib::Response& res) { relay(req, res); };
        server_.Get(".*", forward);
        server_.Post(".*", forward);
        server_.Delete(".*", forward);
        server_.set_read_timeout(120, 0);
        server_.set_write_timeout(120, 0);
        listen_port_ = server_.bind_to_any_port("127.0.0.1");
        if (listen_port_ <= 0) throw std::runtime_error("proxy bind failed");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~RecordingProxy() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    RecordingProxy(const RecordingProxy&) = delete;
    RecordingProxy& operator=(const RecordingProxy&) = delete;

    std::string url() const { return "http://127.0.0.1:" + std::to_string(listen_port_); }

    std::vector<Exchange> exchanges() const {
        std::lock_guard lock(mutex_);
        return log_;
    }

private:
    void relay(const httplib::Request& req, httplib::Response& res) {
        httplib::Client up(host_, port_);
        up.set_read_timeout(120, 0);
        up.set_url_encode(false);
        httplib::Headers headers;
        for (const auto& [k, v] : req.headers)
            if (k.rfind("X-", 0) == 0 || k == "Authorization" || k == "Last-Event-ID") headers.emplace(k, v);
        auto content_type = req.get_header_value("Content-Type");

        httplib::Result r{nullptr, httplib::Error::Unknown};
        if (req.method == "GET") r = up.Get(req.target, headers);
        else if (req.method == "POST") r = up.Post(req.target, headers, req.body, content_type);
        else r = up.Delete(req.target, headers);

        Exchange ex{req.method, req.target, req.body, 0, {}};
        if (r) {
            ex.status = r->status;
            ex.response_body = r->body;
            res.status = r->status;
            res.set_content(r->body, r->get_header_value("Content-Type"));
        } else {
            res.status = 502;
        }
        std::lock_guard lock(mutex_);
        log_.push_back(std::move(ex));
    }

    std::string host_;
    int port_;
    httplib::Server server_;
    int listen_port_ = 0;
    std::thread thread_;
    mutable std::mutex mutex_;
    std::vector<Exchange> log_;
};

}  // namespace porch::testing

#include "porch/hub/server.hpp"

#include "porch/core/error.hpp"
#include "porch/core/segment.hpp"
#include "porch/net/http.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <charconv>

namespace porch::hub {

int http_status(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::BadSignature:
    case ErrorCode::ClockSkew:
    case ErrorCode::ReplayedNonce:
    case ErrorCode::Revoked:
    case ErrorCode::Unauthorized:
        return 401;
    case ErrorCode::DeviceMismatch:
        return 403;
    case ErrorCode::NotFound:
        return 404;
    case ErrorCode::Conflict:
    case ErrorCode::AlreadyTerminal:
    case ErrorCode::NonMonotonicSeq:
        return 409;
    case ErrorCode::Gone:
        return 410;
    case ErrorCode::MalformedEvent:
    case ErrorCode::InvariantViolation:
    case ErrorCode::BadContainer:
    case ErrorCode::BadFilter:
    case ErrorCode::BadRequest:
    case ErrorCode::ParseError:
    case ErrorCode::UnknownTimePhrase:
    case ErrorCode::ProtocolError:
    case ErrorCode::DimensionMismatch:
        return 400;
    default:
        return 500;
    }
}

Json error_body(ErrorCode code, std::string_view message) {
    return {{"error", {{"code", std::string(to_string(code))}, {"message", std::string(message)}}}};
}

namespace {

using httplib::Request;
using httplib::Response;

void send_json(Response& res, const Json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(Response& res, ErrorCode code, std::string_view message) {
    send_json(res, error_body(code, message), http_status(code));
}

bool token_matches(std::string_view given, const std::string& expected) {
    return !expected.empty() && crypto::equal_ct(given, expected);
}

std::string bearer(const Request& req) {
    auto h = req.get_header_value("Authorization");
    constexpr std::string_view kPrefix = "Bearer ";
    if (h.size() > kPrefix.size() && h.compare(0, kPrefix.size(), kPrefix) == 0) return h.substr(kPrefix.size());
    // EventSource cannot set headers, so browsers pass the token as a parameter.
    return req.get_param_value("access_token");
}

bool has_signature(const Request& req) {
    return req.has_header(std::string(kHeaderSignature).c_str()) || req.has_header(std::string(kHeaderDeviceId).c_str());
}

std::map<std::string, std::string> params_of(const Request& req, std::initializer_list<std::string_view> skip = {}) {
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : req.params) {
        if (k == "access_token") continue;
        if (std::find(skip.begin(), skip.end(), k) != skip.end()) continue;
        if (out.count(k)) throw Error(ErrorCode::BadFilter, k, "repeated parameter");
        out[k] = v;
    }
    return out;
}

std::uint64_t parse_seq(const std::string& s) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw Error(ErrorCode::BadRequest, "seq");
    return v;
}

Json parse_body(const Request& req) {
    try {
        return req.body.empty() ? Json::object() : Json::parse(req.body);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::BadRequest, "body", e.what());
    }
}

class LocalStore final : public intent::StoreAccess {
public:
    explicit LocalStore(EventStore& store) : store_(store) {}
    Summary summarize(const QueryFilter& f) override { return store_.summarize(f); }
    std::vector<EventRecord> query(const QueryFilter& f) override { return store_.query(f); }

private:
    EventStore& store_;
};

}  // namespace

struct HubServer::Http {
    httplib::Server server;
};

HubServer::HubServer(HubConfig config, std::shared_ptr<const Clock> clock)
    : config_(std::move(config)), clock_(std::move(clock)) {
    config_.validate();
    std::filesystem::create_directories(config_.data_dir);
    journal_ = std::make_unique<Journal>(config_.data_dir / "journal.log", config_.durable);
    blobs_ = std::make_unique<BlobStore>(config_.data_dir / "blobs", config_.durable);
    devices_ = std::make_unique<DeviceRegistry>(journal_.get(), clock_);
    store_ = std::make_unique<EventStore>(journal_.get(), blobs_.get(), clock_, config_.max_events);
    notify_ = std::make_unique<NotifyService>(journal_.get(), clock_,
                                              NotifyOptions{config_.webhook_retry_ms, config_.webhook_timeout_ms});
    streams_ = std::make_unique<StreamService>(*devices_, commands_, clock_, config_.stream_idle_ms);
    grammar_ = config_.grammar.empty() ? intent::builtin_grammar() : intent::load_grammar(config_.grammar);

    std::size_t unknown = 0;
    for (const auto& r : journal_->recovered()) {
        auto type = r.value("type", std::string());
        if (type == "device" || type == "revoke")
            devices_->replay(r);
        else if (type == "event" || type == "evict")
            store_->replay(r);
        else if (type == "sub_add" || type == "sub_del" || type == "notif" || type == "notif_state")
            notify_->replay(r);
        else
            ++unknown;
    }
    if (unknown) spdlog::warn("journal: ignored {} records of unknown type", unknown);
    spdlog::info("hub state recovered: {} devices, {} events, {} subscriptions", devices_->list().size(),
                 store_->size(), notify_->subscriptions().size());
    journal_->release_recovered();
    store_->set_hook([this](const EventRecord& r) { notify_->notify(r); });

    http_ = std::make_unique<Http>();
    auto& svr = http_->server;
    const auto threads = config_.http_threads;
    svr.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    svr.set_read_timeout(std::chrono::seconds(30));
    svr.set_write_timeout(std::chrono::seconds(30));
    svr.set_payload_max_length(64 * 1024 * 1024);
    svr.set_default_headers({{"Access-Control-Allow-Origin", "*"}});

    // Wraps a handler with error translation.
    auto guarded = [](auto fn) {
        return [fn](const Request& req, Response& res) {
            try {
                fn(req, res);
            } catch (const Error& e) {
                send_error(res, e.code(), e.what());
            } catch (const Json::exception& e) {
                send_error(res, ErrorCode::BadRequest, e.what());
            } catch (const std::exception& e) {
                spdlog::error("{} {} failed: {}", req.method, req.path, e.what());
                send_error(res, ErrorCode::HubError, e.what());
            }
        };
    };
    auto require_user = [this](const Request& req) {
        if (!token_matches(bearer(req), config_.user_token)) throw Error(ErrorCode::Unauthorized, "token", "user token required");
    };
    auto require_admin = [this](const Request& req) {
        if (!token_matches(bearer(req), config_.admin_token))
            throw Error(ErrorCode::Unauthorized, "token", "admin token required");
    };
    // Verifies the signature over the raw request target and body bytes.
    auto require_device = [this](const Request& req) {
        SignedRequest sr;
        sr.device_id = req.get_header_value(std::string(kHeaderDeviceId).c_str());
        auto ts = req.get_header_value(std::string(kHeaderTimestamp).c_str());
        auto [p, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), sr.timestamp_ms);
        if (sr.device_id.empty() || ts.empty() || ec != std::errc() || p != ts.data() + ts.size())
            throw Error(ErrorCode::BadSignature, "headers", "missing or malformed signature headers");
        sr.nonce = req.get_header_value(std::string(kHeaderNonce).c_str());
        sr.signature = req.get_header_value(std::string(kHeaderSignature).c_str());
        return devices_->authenticate(sr, req.method, req.target, req.body);
    };

    svr.Get("/v1/health", [](const Request&, Response& res) { send_json(res, {{"status", "ok"}}); });

    // --- devices (admin)
    svr.Post("/v1/devices", guarded([=, this](const Request& req, Response& res) {
                 require_admin(req);
                 auto body = parse_body(req);
                 auto name = body.value("display_name", body.value("name", std::string()));
                 auto e = devices_->enroll(name);
                 send_json(res, {{"device_id", e.device_id}, {"secret", e.secret_hex}, {"display_name", name}});
             }));
    svr.Get("/v1/devices", guarded([=, this](const Request& req, Response& res) {
                require_admin(req);
                Json list = Json::array();
                for (const auto& d : devices_->list()) list.push_back(to_json(d));
                send_json(res, {{"devices", list}});
            }));
    svr.Post(R"(/v1/devices/([^/]+)/revoke)", guarded([=, this](const Request& req, Response& res) {
                 require_admin(req);
                 devices_->revoke(req.matches[1]);
                 send_json(res, to_json(*devices_->get(req.matches[1])));
             }));

    // --- events
    svr.Post("/v1/events", guarded([=, this](const Request& req, Response& res) {
                 auto device = require_device(req);
                 auto content_type = req.get_header_value("Content-Type");
                 std::string event_json;
                 std::optional<std::string> snapshot;
                 if (content_type.rfind("multipart/", 0) == 0) {
                     auto parts = net::parse_multipart(req.body, content_type);
                     if (!parts) throw Error(ErrorCode::MalformedEvent, "body", "broken multipart body");
                     auto ev = parts->find("event");
                     if (ev == parts->end()) throw Error(ErrorCode::MalformedEvent, "event", "missing event part");
                     event_json = ev->second.content;
                     if (auto s = parts->find("snapshot"); s != parts->end()) snapshot = s->second.content;
                 } else {
                     event_json = req.body;
                 }
                 auto result = store_->ingest(device, decode_event(event_json), snapshot);
                 bool stored = result.status == IngestStatus::Stored;
                 send_json(res,
                           {{"status", stored ? "stored" : "duplicate"},
                            {"event_id", result.record.event.event_id},
                            {"seq", result.record.seq}},
                           stored ? 200 : 409);
             }));
    svr.Get("/v1/events", guarded([=, this](const Request& req, Response& res) {
                require_user(req);
                auto filter = filter_from_params(params_of(req));
                Json list = Json::array();
                for (const auto& r : store_->query(filter)) list.push_back(to_json(r));
                send_json(res, {{"events", list}});
            }));
    svr.Get(R"(/v1/events/([^/]+))", guarded([=, this](const Request& req, Response& res) {
                require_user(req);
                auto rec = store_->get(req.matches[1]);
                if (!rec) throw Error(ErrorCode::NotFound, "event", req.matches[1]);
                send_json(res, to_json(*rec));
            }));
    svr.Get(R"(/v1/events/([^/]+)/snapshot)", guarded([=, this](const Request& req, Response& res) {
                require_user(req);
                if (!store_->get(req.matches[1])) throw Error(ErrorCode::NotFound, "event", req.matches[1]);
                auto bytes = store_->snapshot(req.matches[1]);
                if (!bytes) throw Error(ErrorCode::NotFound, "snapshot", req.matches[1]);
                res.set_content(*bytes, "application/octet-stream");
            }));
    svr.Get("/v1/summary", guarded([=, this](const Request& req, Response& res) {
                require_user(req);
                auto params = params_of(req);
                // The limit of a filter does not apply to summaries.
                params.erase("limit");
                send_json(res, to_json(store_->summarize(filter_from_params(params))));
            }));

    // --- device commands
    svr.Get(R"(/v1/devices/([^/]+)/commands)", guarded([=, this](const Request& req, Response& res) {
                auto device = require_device(req);
                if (device != req.matches[1]) throw Error(ErrorCode::DeviceMismatch, "device_id");
                int wait = 0;
                if (req.has_param("wait")) {
                    auto w = req.get_param_value("wait");
                    auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), wait);
                    if (ec != std::errc() || p != w.data() + w.size() || wait < 0)
                        throw Error(ErrorCode::BadRequest, "wait");
                }
                wait = std::min(wait, config_.max_wait_s);
                Json list = Json::array();
                for (const auto& c : commands_.take(device, std::chrono::seconds(wait))) list.push_back(to_json(c));
                send_json(res, {{"commands", list}});
            }));
    svr.Post(R"(/v1/devices/([^/]+)/policy)", guarded([=, this](const Request& req, Response& res) {
                 require_user(req);
                 if (!devices_->active(req.matches[1])) throw Error(ErrorCode::NotFound, "device", req.matches[1]);
                 auto body = parse_body(req);
                 if (!body.contains("min_accuracy") || !body["min_accuracy"].is_number())
                     throw Error(ErrorCode::BadRequest, "min_accuracy");
                 auto v = body["min_accuracy"].get<double>();
                 if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::BadRequest, "min_accuracy", "must be in [0, 1]");
                 UpdatePolicy cmd{v};
                 commands_.push(req.matches[1], cmd);
                 send_json(res, to_json(EdgeCommand{cmd}));
             }));

    // --- streaming
    svr.Post(R"(/v1/devices/([^/]+)/stream)", guarded([=, this](const Request& req, Response& res) {
                 require_user(req);
                 send_json(res, to_json(streams_->request_stream(req.matches[1])));
             }));
    svr.Post(R"(/v1/streams/([^/]+)/segments/([^/]+))", guarded([=, this](const Request& req, Response& res) {
                 auto device = require_device(req);
                 streams_->append_segment(req.matches[1], device, parse_seq(req.matches[2]), req.body);
                 send_json(res, {{"accepted", true}});
             }));
    svr.Get(R"(/v1/streams/([^/]+)/playlist)", guarded([=, this](const Request& req, Response& res) {
                require_user(req);
                res.set_content(streams_->playlist(req.matches[1]), "text/plain");
            }));
    svr.Get(R"(/v1/streams/([^/]+)/segments/([^/]+))", guarded([=, this](const Request& req, Response& res) {
                require_user(req);
                auto bytes = streams_->segment(req.matches[1], parse_seq(req.matches[2]));
                res.set_content(*bytes, "application/octet-stream");
            }));
    svr.Get(R"(/v1/streams/([^/]+))", guarded([=, this](const Request& req, Response& res) {
                require_user(req);
                auto s = streams_->get(req.matches[1]);
                if (!s) throw Error(ErrorCode::NotFound, "session", req.matches[1]);
                send_json(res, to_json(*s));
            }));

    // --- notifications
    svr.Post("/v1/subscriptions", guarded([=, this](const Request& req, Response& res) {
                 require_user(req);
                 send_json(res, to_json(notify_->subscribe(subscription_from_json(parse_body(req)))));
             }));
    svr.Get("/v1/subscriptions", guarded([=, this](const Request& req, Response& res) {
                require_user(req);
                Json list = Json::array();
                for (const auto& s : notify_->subscriptions()) list.push_back(to_json(s));
                send_json(res, {{"subscriptions", list}});
            }));
    svr.Delete(R"(/v1/subscriptions/([^/]+))", guarded([=, this](const Request& req, Response& res) {
                   require_user(req);
                   notify_->unsubscribe(req.matches[1]);
                   send_json(res, {{"deleted", std::string(req.matches[1])}});
               }));
    svr.Get("/v1/notifications/stream", [=, this](const Request& req, Response& res) {
        if (!token_matches(bearer(req), config_.user_token))
            return send_error(res, ErrorCode::Unauthorized, "user token required");
        auto subscriber = req.get_param_value("subscriber");
        if (subscriber.empty()) return send_error(res, ErrorCode::BadRequest, "subscriber is required");
        std::optional<std::uint64_t> last;
        auto last_header = req.get_header_value("Last-Event-ID");
        if (!last_header.empty()) {
            std::uint64_t v = 0;
            auto [p, ec] = std::from_chars(last_header.data(), last_header.data() + last_header.size(), v);
            if (ec == std::errc()) last = v;
        }
        auto stream = notify_->broker().attach(subscriber, last);
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "text/event-stream",
            [stream, first = true](std::size_t, httplib::DataSink& sink) mutable {
                if (first) {
                    first = false;
                    std::string hello = "retry: 1000\n: connected\n\n";
                    return sink.write(hello.data(), hello.size());
                }
                auto m = stream->pop_for(std::chrono::seconds(5));
                if (!m) {
                    if (stream->closed()) {
                        sink.done();
                        return true;
                    }
                    std::string ping = ": keepalive\n\n";
                    return sink.write(ping.data(), ping.size());
                }
                auto text = format_sse(*m);
                return sink.write(text.data(), text.size());
            },
            [stream](bool) { stream->close(); });
    });
    svr.Get("/v1/notifications", guarded([=, this](const Request& req, Response& res) {
                require_user(req);
                std::optional<NotificationState> state;
                std::optional<std::string> subscriber;
                if (req.has_param("state")) {
                    state = notification_state_from_string(req.get_param_value("state"));
                    if (!state) throw Error(ErrorCode::BadRequest, "state");
                }
                if (req.has_param("subscriber")) subscriber = req.get_param_value("subscriber");
                Json list = Json::array();
                for (const auto& n : notify_->list(state, subscriber)) list.push_back(to_json(n));
                send_json(res, {{"notifications", list}});
            }));
    svr.Post(R"(/v1/notifications/([^/]+)/respond)", guarded([=, this](const Request& req, Response& res) {
                 require_user(req);
                 auto outcome = notify_->respond(req.matches[1], respond_action_from_json(parse_body(req)));
                 if (outcome.applied) return send_json(res, to_json(outcome.notification));
                 auto body = error_body(ErrorCode::AlreadyTerminal, "notification is already " + to_string(outcome.notification.state));
                 body["notification"] = to_json(outcome.notification);
                 send_json(res, body, 409);
             }));

    // --- conversational queries
    svr.Post("/v1/ask", guarded([=, this](const Request& req, Response& res) {
                 require_user(req);
                 auto body = parse_body(req);
                 if (!body.contains("utterance") || !body["utterance"].is_string())
                     throw Error(ErrorCode::BadRequest, "utterance");
                 auto now = clock_->now_ms();
                 if (body.contains("now_ms") && !body["now_ms"].is_null()) now = body["now_ms"].get<TimestampMs>();
                 auto parsed = intent::parse(body["utterance"].get<std::string>(), now, config_.utc_offset_minutes, grammar_);
                 if (auto* f = std::get_if<intent::ParseFailure>(&parsed)) {
                     auto err = error_body(ErrorCode::ParseError, f->detail);
                     err["error"]["reason"] = intent::to_string(f->reason);
                     return send_json(res, err, 400);
                 }
                 LocalStore store(*store_);
                 auto answer = intent::execute(std::get<intent::Intent>(parsed), store, now, config_.utc_offset_minutes);
                 send_json(res, intent::to_json(answer));
             }));

    if (config_.dashboard_dir) svr.set_mount_point("/", config_.dashboard_dir->string());

    svr.Options(".*", [](const Request&, Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Authorization, Content-Type, Last-Event-ID");
        res.status = 204;
    });
    // Anything unrouted. A request carrying device credentials for a path it
    // did not sign must look like an auth failure, not a missing route.
    auto fallback = guarded([=](const Request& req, Response& res) {
        if (has_signature(req)) require_device(req);
        send_error(res, ErrorCode::NotFound, "no route for " + req.method + " " + req.path);
    });
    svr.Get(".*", fallback);
    svr.Post(".*", fallback);
    svr.Put(".*", fallback);
    svr.Delete(".*", fallback);
    svr.Patch(".*", fallback);
    svr.set_exception_handler([](const Request&, Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        send_error(res, ErrorCode::HubError, what);
    });
}

HubServer::~HubServer() { stop(); }

int HubServer::start() {
    auto& svr = http_->server;
    if (config_.port == 0)
        port_ = svr.bind_to_any_port(config_.listen);
    else
        port_ = svr.bind_to_port(config_.listen, config_.port) ? config_.port : -1;
    if (port_ <= 0) throw Error(ErrorCode::HubError, "listen", "cannot bind " + config_.listen + ":" + std::to_string(config_.port));
    listen_thread_ = std::thread([this] { http_->server.listen_after_bind(); });
    svr.wait_until_ready();
    maintenance_thread_ = std::thread([this] { maintenance_loop(); });
    spdlog::info("hub listening on {}", url());
    return port_;
}

std::string HubServer::url() const {
    auto host = config_.listen == "0.0.0.0" ? std::string("127.0.0.1") : config_.listen;
    return "http://" + host + ":" + std::to_string(port_);
}

void HubServer::wait() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return stopping_; });
}

void HubServer::stop() {
    {
        std::lock_guard lock(mutex_);
        if (stopping_ && !listen_thread_.joinable() && !maintenance_thread_.joinable()) return;
        stopping_ = true;
    }
    cv_.notify_all();
    commands_.shutdown();
    notify_->broker().close_all();
    if (http_) http_->server.stop();
    if (listen_thread_.joinable()) listen_thread_.join();
    if (maintenance_thread_.joinable()) maintenance_thread_.join();
    notify_->shutdown();
}

void HubServer::maintenance_loop() {
    auto last_expire = clock_->now_ms();
    std::unique_lock lock(mutex_);
    while (!stopping_) {
        cv_.wait_for(lock, std::chrono::milliseconds(config_.reap_interval_ms), [&] { return stopping_; });
        if (stopping_) break;
        lock.unlock();
        const auto now = clock_->now_ms();
        streams_->reap(now);
        if (now - last_expire >= config_.expire_interval_ms) {
            notify_->expire_pending(now, config_.notification_ttl_ms);
            last_expire = now;
        }
        lock.lock();
    }
}

}  // namespace porch::hub

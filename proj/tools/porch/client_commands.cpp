#include "cli.hpp"

#include "porch/core/query.hpp"
#include "porch/core/segment.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>

#include <atomic>
#include <chrono>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

namespace porch::cli {

namespace {

enum class Role { User, Admin };

net::HttpClient make_client(const ClientOptions& opts, Role role) {
    auto s = resolve_settings(opts);
    net::HttpClient client(s.hub_url);
    client.set_bearer_token(role == Role::Admin ? s.admin_token : s.user_token);
    return client;
}

/// Parses a successful JSON response; anything else becomes an exit code.
std::optional<Json> call(const Output& out, const net::HttpClient& client, std::string_view method,
                         const std::string& target, const std::optional<Json>& body, int& code) {
    auto r = body ? client.request(method, target, body->dump(), "application/json")
                  : client.request(method, target);
    if (!r.ok()) {
        code = out.fail_http(r);
        return std::nullopt;
    }
    auto j = Json::parse(r.body, nullptr, false);
    if (j.is_discarded()) {
        code = out.fail(kFailure, "ProtocolError", "hub answered with something other than JSON");
        return std::nullopt;
    }
    code = kOk;
    return j;
}

std::string format_ms(TimestampMs ms) {
    auto tp = std::chrono::sys_time<std::chrono::milliseconds>(std::chrono::milliseconds(ms));
    return fmt::format("{:%Y-%m-%d %H:%M:%S}Z", std::chrono::floor<std::chrono::seconds>(tp));
}

std::string describe_detections(const Json& detections) {
    if (!detections.is_array() || detections.empty()) return "nothing recognized";
    std::string out;
    for (const auto& d : detections) {
        if (!out.empty()) out += ", ";
        out += d.value("label", "?");
        if (d.contains("identity") && d["identity"].is_object()) {
            const auto& id = d["identity"];
            if (id.value("known", false))
                out += " (" + id.value("name", std::string("known")) + ")";
            else
                out += " (unknown)";
        }
        out += " " + format_real(d.value("confidence", 0.0));
    }
    return out;
}

std::string describe_record(const Json& r) {
    return fmt::format("{}  {}  {}  {}", format_ms(r.value("captured_at_ms", TimestampMs{0})), r.value("device_id", ""),
                       r.value("event_id", ""), describe_detections(r.value("detections", Json::array())));
}

// ---------------------------------------------------------------- admin

void register_admin(CLI::App& app, Output& out, int& exit_code) {
    auto* admin = app.add_subcommand("admin", "Device administration (admin token)");
    admin->require_subcommand(1);
    auto opts = std::make_shared<ClientOptions>();
    add_client_options(admin, *opts);

    auto name = std::make_shared<std::string>();
    auto* enroll = admin->add_subcommand("enroll", "Enroll a device and print its credentials");
    enroll->add_option("--name", *name, "Display name")->required();
    enroll->callback([=, &out, &exit_code] {
        auto client = make_client(*opts, Role::Admin);
        auto j = call(out, client, "POST", "/v1/devices", Json{{"display_name", *name}}, exit_code);
        if (!j) return;
        if (out.json) return out.line(*j);
        out.text("device_id = \"" + j->value("device_id", "") + "\"");
        out.text("device_secret = \"" + j->value("secret", "") + "\"");
    });

    auto* list = admin->add_subcommand("devices", "List enrolled devices");
    list->callback([=, &out, &exit_code] {
        auto client = make_client(*opts, Role::Admin);
        auto j = call(out, client, "GET", "/v1/devices", std::nullopt, exit_code);
        if (!j) return;
        for (const auto& d : (*j)["devices"]) {
            if (out.json)
                out.line(d);
            else
                out.text(fmt::format("{}  {}  {}", d.value("device_id", ""), d.value("status", ""),
                                     d.value("display_name", "")));
        }
    });

    auto device = std::make_shared<std::string>();
    auto* revoke = admin->add_subcommand("revoke", "Revoke a device's credentials");
    revoke->add_option("device_id", *device, "Device id")->required();
    revoke->callback([=, &out, &exit_code] {
        auto client = make_client(*opts, Role::Admin);
        auto j = call(out, client, "POST", "/v1/devices/" + url_encode(*device) + "/revoke", Json::object(), exit_code);
        if (!j) return;
        if (out.json) return out.line(*j);
        out.text("revoked " + *device);
    });
}

// ---------------------------------------------------------------- events

struct FilterArgs {
    std::string device;
    std::optional<TimestampMs> from;
    std::optional<TimestampMs> to;
    std::string label;
    std::string identity_known;
    std::optional<double> min_confidence;
    std::optional<std::size_t> limit;
    std::string order;

    std::map<std::string, std::string> params(bool with_paging) const {
        std::map<std::string, std::string> p;
        if (!device.empty()) p["device_id"] = device;
        if (from) p["from_ms"] = std::to_string(*from);
        if (to) p["to_ms"] = std::to_string(*to);
        if (!label.empty()) p["label"] = label;
        if (!identity_known.empty()) p["identity_known"] = identity_known;
        if (min_confidence) p["min_confidence"] = format_real(*min_confidence);
        if (with_paging) {
            if (limit) p["limit"] = std::to_string(*limit);
            if (!order.empty()) p["order"] = order;
        }
        return p;
    }
};

std::string query_string(const std::map<std::string, std::string>& params) {
    std::string q;
    for (const auto& [k, v] : params) {
        q += q.empty() ? "?" : "&";
        q += url_encode(k) + "=" + url_encode(v);
    }
    return q;
}

void add_filter_options(CLI::App* cmd, FilterArgs& f, bool with_paging) {
    cmd->add_option("--device", f.device, "Only this device");
    cmd->add_option("--from", f.from, "Captured at or after this epoch millisecond");
    cmd->add_option("--to", f.to, "Captured before this epoch millisecond");
    cmd->add_option("--label", f.label, "Some detection has this label");
    cmd->add_option("--identity-known", f.identity_known, "Some detection has an identity with known = true|false")
        ->check(CLI::IsMember({"true", "false"}));
    cmd->add_option("--min-confidence", f.min_confidence, "Some detection has at least this confidence")
        ->check(CLI::Range(0.0, 1.0));
    if (with_paging) {
        cmd->add_option("--limit", f.limit, "At most this many records (1-500)")->check(CLI::Range(1, 500));
        cmd->add_option("--order", f.order, "newest-first or oldest-first")
            ->check(CLI::IsMember({"newest-first", "oldest-first"}));
    }
}

void register_events(CLI::App& app, Output& out, int& exit_code) {
    auto* events = app.add_subcommand("events", "Query stored events (user token)");
    events->require_subcommand(1);
    auto opts = std::make_shared<ClientOptions>();
    add_client_options(events, *opts);

    auto qf = std::make_shared<FilterArgs>();
    auto* query = events->add_subcommand("query", "List events matching a filter");
    add_filter_options(query, *qf, true);
    query->callback([=, &out, &exit_code] {
        auto client = make_client(*opts, Role::User);
        auto j = call(out, client, "GET", "/v1/events" + query_string(qf->params(true)), std::nullopt, exit_code);
        if (!j) return;
        const auto& list = (*j)["events"];
        for (const auto& r : list) {
            if (out.json)
                out.line(r);
            else
                out.text(describe_record(r));
        }
        if (!out.json && list.empty()) out.text("no matching events");
    });

    auto sf = std::make_shared<FilterArgs>();
    auto* summary = events->add_subcommand("summary", "Aggregate counts for a filter");
    add_filter_options(summary, *sf, false);
    summary->callback([=, &out, &exit_code] {
        auto client = make_client(*opts, Role::User);
        auto j = call(out, client, "GET", "/v1/summary" + query_string(sf->params(false)), std::nullopt, exit_code);
        if (!j) return;
        if (out.json) return out.line(*j);
        out.text(fmt::format("{} events ({} known, {} unknown people)", j->value("total_events", 0),
                             j->value("known_count", 0), j->value("unknown_count", 0)));
        for (const auto& [label, n] : (*j)["counts_by_label"].items()) out.text(fmt::format("  {}: {}", label, n.get<long long>()));
    });

    auto event_id = std::make_shared<std::string>();
    auto* get = events->add_subcommand("get", "Show one event");
    get->add_option("event_id", *event_id, "Event id")->required();
    get->callback([=, &out, &exit_code] {
        auto client = make_client(*opts, Role::User);
        auto j = call(out, client, "GET", "/v1/events/" + url_encode(*event_id), std::nullopt, exit_code);
        if (!j) return;
        if (out.json) return out.line(*j);
        out.text(describe_record(*j));
    });

    auto snap_id = std::make_shared<std::string>();
    auto snap_out = std::make_shared<std::string>();
    auto* snap = events->add_subcommand("snapshot", "Save an event's snapshot segment to a file");
    snap->add_option("event_id", *snap_id, "Event id")->required();
    snap->add_option("--out", *snap_out, "Destination file")->required();
    snap->callback([=, &out, &exit_code] {
        auto client = make_client(*opts, Role::User);
        auto r = client.request("GET", "/v1/events/" + url_encode(*snap_id) + "/snapshot");
        if (!r.ok()) {
            exit_code = out.fail_http(r);
            return;
        }
        std::ofstream f(*snap_out, std::ios::binary | std::ios::trunc);
        f.write(r.body.data(), static_cast<std::streamsize>(r.body.size()));
        if (!f) {
            exit_code = out.fail(kFailure, "IoError", "cannot write " + *snap_out);
            return;
        }
        if (out.json)
            out.line({{"event_id", *snap_id}, {"path", *snap_out}, {"bytes", r.body.size()}});
        else
            out.text(fmt::format("wrote {} bytes to {}", r.body.size(), *snap_out));
    });
}

// ---------------------------------------------------------------- ask

void register_ask(CLI::App& app, Output& out, int& exit_code) {
    auto opts = std::make_shared<ClientOptions>();
    auto utterance = std::make_shared<std::string>();
    auto now = std::make_shared<std::optional<TimestampMs>>();
    auto* ask = app.add_subcommand("ask", "Ask a question about door activity in plain words");
    add_client_options(ask, *opts);
    ask->add_option("utterance", *utterance, "The question, e.g. \"what is happening at the door\"")->required();
    ask->add_option("--now-ms", *now, "Answer as if it were this epoch millisecond");
    ask->callback([=, &out, &exit_code] {
        auto client = make_client(*opts, Role::User);
        Json body{{"utterance", *utterance}};
        if (*now) body["now_ms"] = **now;
        auto j = call(out, client, "POST", "/v1/ask", body, exit_code);
        if (!j) return;
        if (out.json) return out.line(*j);
        out.text(j->value("text", ""));
    });
}

// ---------------------------------------------------------------- notify

struct SubscribeArgs {
    std::string subscriber;
    std::string device;
    std::string label;
    double min_confidence = 0.0;
    std::string webhook;
};

std::string describe_notification(const Json& n) {
    std::string line = fmt::format("[{}] {} event {}", n.value("notif_id", ""), n.value("state", ""), n.value("event_id", ""));
    if (n.contains("event") && n["event"].is_object()) line += ": " + describe_record(n["event"]);
    if (n.contains("message") && n["message"].is_string()) line += " message=\"" + n["message"].get<std::string>() + "\"";
    return line;
}

int respond(const Output& out, const net::HttpClient& client, const std::string& id, const Json& body) {
    int code = kOk;
    auto j = call(out, client, "POST", "/v1/notifications/" + url_encode(id) + "/respond", body, code);
    if (!j) return code;
    if (out.json)
        out.line(*j);
    else
        out.text(describe_notification(*j));
    return kOk;
}

/// Reads `respond <id> <message>` and `ignore <id>` lines from stdin.
void stdin_commands(Output out, net::HttpClient client) {
    std::string line;
    while (std::getline(std::cin, line)) {
        std::istringstream in(line);
        std::string verb, id;
        in >> verb >> id;
        if (verb.empty()) continue;
        if ((verb != "respond" && verb != "ignore") || id.empty()) {
            out.fail(kUsage, "BadCommand", "expected 'respond <id> <message>' or 'ignore <id>'");
            continue;
        }
        Json body{{"action", verb}};
        if (verb == "respond") {
            std::string message;
            std::getline(in >> std::ws, message);
            body["message"] = message;
        }
        respond(out, client, id, body);
    }
}

int tail(const Output& out, const net::HttpClient& client, const std::string& subscriber, std::optional<std::size_t> count,
         bool interactive) {
    SignalWatcher watcher([] {
        std::cout.flush();
        std::_Exit(kOk);
    });
    if (interactive) std::thread(stdin_commands, out, client).detach();

    std::size_t seen = 0;
    std::string last_id;
    int backoff_ms = 500;
    auto done = [&] { return count && seen >= *count; };
    while (!done()) {
        net::SseParser parser;
        std::map<std::string, std::string> headers;
        if (!last_id.empty()) headers["Last-Event-ID"] = last_id;
        bool connected = false;
        auto r = client.stream(
            "/v1/notifications/stream?subscriber=" + url_encode(subscriber),
            [&](std::string_view chunk) {
                if (!connected) {
                    connected = true;
                    backoff_ms = 500;
                }
                for (auto& ev : parser.feed(chunk)) {
                    if (!ev.id.empty()) last_id = ev.id;
                    auto data = Json::parse(ev.data, nullptr, false);
                    if (data.is_discarded()) continue;
                    if (out.json) {
                        out.line({{"event", ev.event}, {"id", ev.id}, {"data", data}});
                    } else if (ev.event == "notification") {
                        out.text(describe_notification(data));
                    } else if (ev.event == "state_change") {
                        out.text("state change " + describe_notification(data));
                    }
                    if (ev.event == "notification") ++seen;
                    if (done()) return false;
                }
                return true;
            },
            std::chrono::seconds(30), headers);
        if (done()) break;
        if (r.status != 0 && r.status != 200) return out.fail_http(r);
        if (r.status == 0 && !connected && backoff_ms >= 8000) return out.fail_http(r);
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
        backoff_ms = std::min(backoff_ms * 2, 8000);
    }
    return kOk;
}

void register_notify(CLI::App& app, Output& out, int& exit_code) {
    auto* notify = app.add_subcommand("notify", "Subscriptions and alerts (user token)");
    notify->require_subcommand(1);
    auto opts = std::make_shared<ClientOptions>();
    add_client_options(notify, *opts);

    auto subscriber = std::make_shared<std::string>();
    auto count = std::make_shared<std::optional<std::size_t>>();
    auto no_stdin = std::make_shared<bool>(false);
    auto* t = notify->add_subcommand("tail", "Print notifications as they arrive; type 'respond <id> <msg>' or 'ignore <id>'");
    t->add_option("--subscriber", *subscriber, "Subscriber id")->required();
    t->add_option("--count", *count, "Exit after this many notifications");
    t->add_flag("--no-stdin", *no_stdin, "Do not read respond/ignore commands from stdin");
    t->callback([=, &out, &exit_code] {
        exit_code = tail(out, make_client(*opts, Role::User), *subscriber, *count, !*no_stdin);
    });

    auto sa = std::make_shared<SubscribeArgs>();
    auto* sub = notify->add_subcommand("subscribe", "Create a subscription");
    sub->add_option("--subscriber", sa->subscriber, "Subscriber id")->required();
    sub->add_option("--device", sa->device, "Only events from this device");
    sub->add_option("--label", sa->label, "Only events with a detection of this label");
    sub->add_option("--min-confidence", sa->min_confidence, "Minimum detection confidence")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--webhook", sa->webhook, "Deliver by POST to this URL instead of the push stream");
    sub->callback([=, &out, &exit_code] {
        Json body{{"subscriber_id", sa->subscriber},
                  {"device_id", sa->device.empty() ? Json(nullptr) : Json(sa->device)},
                  {"label", sa->label.empty() ? Json(nullptr) : Json(sa->label)},
                  {"min_confidence", sa->min_confidence},
                  {"channel", sa->webhook.empty() ? "push" : "webhook"}};
        if (!sa->webhook.empty()) body["url"] = sa->webhook;
        auto j = call(out, make_client(*opts, Role::User), "POST", "/v1/subscriptions", body, exit_code);
        if (!j) return;
        if (out.json) return out.line(*j);
        out.text("subscription " + j->value("sub_id", ""));
    });

    auto sub_id = std::make_shared<std::string>();
    auto* unsub = notify->add_subcommand("unsubscribe", "Delete a subscription");
    unsub->add_option("sub_id", *sub_id, "Subscription id")->required();
    unsub->callback([=, &out, &exit_code] {
        auto j = call(out, make_client(*opts, Role::User), "DELETE", "/v1/subscriptions/" + url_encode(*sub_id),
                      std::nullopt, exit_code);
        if (!j) return;
        if (out.json) return out.line(*j);
        out.text("deleted " + *sub_id);
    });

    auto list_state = std::make_shared<std::string>();
    auto list_sub = std::make_shared<std::string>();
    auto* list = notify->add_subcommand("list", "List notifications");
    list->add_option("--state", *list_state, "pending, responded, ignored or expired")
        ->check(CLI::IsMember({"pending", "responded", "ignored", "expired"}));
    list->add_option("--subscriber", *list_sub, "Only this subscriber");
    list->callback([=, &out, &exit_code] {
        std::map<std::string, std::string> p;
        if (!list_state->empty()) p["state"] = *list_state;
        if (!list_sub->empty()) p["subscriber"] = *list_sub;
        auto j = call(out, make_client(*opts, Role::User), "GET", "/v1/notifications" + query_string(p), std::nullopt,
                      exit_code);
        if (!j) return;
        for (const auto& n : (*j)["notifications"]) {
            if (out.json)
                out.line(n);
            else
                out.text(describe_notification(n));
        }
    });

    auto notif_id = std::make_shared<std::string>();
    auto message = std::make_shared<std::string>();
    auto* resp = notify->add_subcommand("respond", "Respond to a pending notification");
    resp->add_option("notif_id", *notif_id, "Notification id")->required();
    resp->add_option("--message", *message, "Response text");
    resp->callback([=, &out, &exit_code] {
        exit_code = respond(out, make_client(*opts, Role::User), *notif_id, {{"action", "respond"}, {"message", *message}});
    });

    auto ignore_id = std::make_shared<std::string>();
    auto* ign = notify->add_subcommand("ignore", "Ignore a pending notification");
    ign->add_option("notif_id", *ignore_id, "Notification id")->required();
    ign->callback([=, &out, &exit_code] {
        exit_code = respond(out, make_client(*opts, Role::User), *ignore_id, {{"action", "ignore"}});
    });
}

// ---------------------------------------------------------------- stream

struct PlaylistEntry {
    std::uint64_t seq = 0;
    TimestampMs duration_ms = 0;
    std::string uri;
};

std::vector<PlaylistEntry> parse_playlist(const std::string& text, bool& ended) {
    std::vector<PlaylistEntry> out;
    std::istringstream in(text);
    std::string line;
    TimestampMs duration = 0;
    ended = false;
    while (std::getline(in, line)) {
        if (line.rfind("#DURATION:", 0) == 0) {
            duration = std::stoll(line.substr(10));
        } else if (line == "#ENDLIST") {
            ended = true;
        } else if (!line.empty() && line[0] != '#') {
            PlaylistEntry e;
            e.uri = line;
            e.duration_ms = duration;
            e.seq = std::stoull(line.substr(line.rfind('/') + 1));
            out.push_back(std::move(e));
        }
    }
    return out;
}

int stream_request(const Output& out, const net::HttpClient& client, const std::string& hub_url,
                   const std::string& device, double watch_s) {
    int code = kOk;
    auto session = call(out, client, "POST", "/v1/devices/" + url_encode(device) + "/stream", Json::object(), code);
    if (!session) return code;
    auto playlist = session->value("playlist_url", "");
    if (out.json)
        out.line(*session);
    else
        out.text("playlist " + hub_url + playlist);

    std::atomic<bool> stop{false};
    SignalWatcher watcher([&stop] { stop = true; });
    auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(watch_s);
    std::set<std::uint64_t> seen;
    while (!stop && std::chrono::steady_clock::now() < deadline) {
        auto r = client.request("GET", playlist);
        if (!r.ok()) return out.fail_http(r);
        bool ended = false;
        for (const auto& e : parse_playlist(r.body, ended)) {
            if (!seen.insert(e.seq).second) continue;
            auto seg = client.request("GET", e.uri);
            if (!seg.ok()) continue;  // rolled out of the window already
            std::size_t frames = is_valid_segment(seg.body) ? decode_segment(seg.body).size() : 0;
            if (out.json)
                out.line({{"segment", e.seq}, {"duration_ms", e.duration_ms}, {"bytes", seg.body.size()}, {"frames", frames}});
            else
                out.text(fmt::format("segment {}: {} frames, {} ms, {} bytes", e.seq, frames, e.duration_ms, seg.body.size()));
        }
        if (ended) {
            if (out.json)
                out.line({{"status", "ended"}});
            else
                out.text("stream ended");
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(500));
    }
    return kOk;
}

void register_stream(CLI::App& app, Output& out, int& exit_code) {
    auto* stream = app.add_subcommand("stream", "Live view (user token)");
    stream->require_subcommand(1);
    auto opts = std::make_shared<ClientOptions>();
    add_client_options(stream, *opts);

    auto device = std::make_shared<std::string>();
    auto watch = std::make_shared<double>(10.0);
    auto* req = stream->add_subcommand("request", "Start a live session and report segments as they arrive");
    req->add_option("--device", *device, "Device id")->required();
    req->add_option("--watch-s", *watch, "Poll the playlist for this many seconds; 0 only starts the session")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    req->callback([=, &out, &exit_code] {
        auto settings = resolve_settings(*opts);
        exit_code = stream_request(out, make_client(*opts, Role::User), settings.hub_url, *device, *watch);
    });

    auto policy_device = std::make_shared<std::string>();
    auto min_accuracy = std::make_shared<double>(0.0);
    auto* policy = app.add_subcommand("policy", "Change a device's detector selection (user token)");
    add_client_options(policy, *opts);
    policy->add_option("--device", *policy_device, "Device id")->required();
    policy->add_option("--min-accuracy", *min_accuracy, "Cheapest backend with at least this accuracy")
        ->required()
        ->check(CLI::Range(0.0, 1.0));
    policy->callback([=, &out, &exit_code] {
        auto j = call(out, make_client(*opts, Role::User), "POST", "/v1/devices/" + url_encode(*policy_device) + "/policy",
                      Json{{"min_accuracy", *min_accuracy}}, exit_code);
        if (!j) return;
        if (out.json) return out.line(*j);
        out.text("policy update queued for " + *policy_device);
    });
}

}  // namespace

void register_client_commands(CLI::App& app, Output& out, int& exit_code) {
    register_admin(app, out, exit_code);
    register_events(app, out, exit_code);
    register_ask(app, out, exit_code);
    register_notify(app, out, exit_code);
    register_stream(app, out, exit_code);
}

}  // namespace porch::cli

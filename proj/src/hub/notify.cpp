#include "porch/hub/notify.hpp"

#include "porch/core/crypto.hpp"
#include "porch/core/error.hpp"
#include "porch/net/http.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>

namespace porch::hub {

void Subscription::validate() const {
    if (subscriber_id.empty()) throw Error(ErrorCode::BadRequest, "subscriber_id");
    if (device_id && device_id->empty()) throw Error(ErrorCode::BadRequest, "device_id");
    if (label && label->empty()) throw Error(ErrorCode::BadRequest, "label");
    if (!(min_confidence >= 0.0 && min_confidence <= 1.0)) throw Error(ErrorCode::BadRequest, "min_confidence");
    if (channel == ChannelKind::Webhook) {
        if (url.rfind("http://", 0) != 0 && url.rfind("https://", 0) != 0)
            throw Error(ErrorCode::BadRequest, "url", "webhook subscriptions need an http(s) URL");
    }
}

Json to_json(const Subscription& s) {
    Json j{{"sub_id", s.sub_id},
           {"subscriber_id", s.subscriber_id},
           {"device_id", s.device_id ? Json(*s.device_id) : Json(nullptr)},
           {"label", s.label ? Json(*s.label) : Json(nullptr)},
           {"min_confidence", s.min_confidence},
           {"channel", s.channel == ChannelKind::Push ? "push" : "webhook"}};
    if (s.channel == ChannelKind::Webhook) j["url"] = s.url;
    return j;
}

Subscription subscription_from_json(const Json& j) {
    if (!j.is_object()) throw Error(ErrorCode::BadRequest, "subscription", "expected object");
    auto opt_string = [&](const char* key) -> std::optional<std::string> {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) return std::nullopt;
        if (!it->is_string()) throw Error(ErrorCode::BadRequest, key, "expected string");
        return it->get<std::string>();
    };
    Subscription s;
    s.sub_id = opt_string("sub_id").value_or("");
    s.subscriber_id = opt_string("subscriber_id").value_or("");
    s.device_id = opt_string("device_id");
    s.label = opt_string("label");
    if (auto it = j.find("min_confidence"); it != j.end() && !it->is_null()) {
        if (!it->is_number()) throw Error(ErrorCode::BadRequest, "min_confidence", "expected number");
        s.min_confidence = quantize(it->get<double>());
    }
    auto channel = opt_string("channel").value_or("push");
    if (channel == "push")
        s.channel = ChannelKind::Push;
    else if (channel == "webhook")
        s.channel = ChannelKind::Webhook;
    else
        throw Error(ErrorCode::BadRequest, "channel", "expected push or webhook");
    s.url = opt_string("url").value_or("");
    s.validate();
    return s;
}

std::string to_string(NotificationState s) {
    switch (s) {
    case NotificationState::Pending: return "pending";
    case NotificationState::Responded: return "responded";
    case NotificationState::Ignored: return "ignored";
    case NotificationState::Expired: return "expired";
    }
    return "pending";
}

std::optional<NotificationState> notification_state_from_string(std::string_view s) {
    if (s == "pending") return NotificationState::Pending;
    if (s == "responded") return NotificationState::Responded;
    if (s == "ignored") return NotificationState::Ignored;
    if (s == "expired") return NotificationState::Expired;
    return std::nullopt;
}

Json to_json(const Notification& n) {
    return {{"notif_id", n.notif_id},
            {"sub_id", n.sub_id},
            {"subscriber_id", n.subscriber_id},
            {"event_id", n.event_id},
            {"created_at_ms", n.created_at_ms},
            {"state", to_string(n.state)},
            {"message", n.message ? Json(*n.message) : Json(nullptr)},
            {"state_at_ms", n.state_at_ms ? Json(*n.state_at_ms) : Json(nullptr)}};
}

Notification notification_from_json(const Json& j) {
    try {
        Notification n;
        n.notif_id = j.at("notif_id").get<std::string>();
        n.sub_id = j.at("sub_id").get<std::string>();
        n.subscriber_id = j.at("subscriber_id").get<std::string>();
        n.event_id = j.at("event_id").get<std::string>();
        n.created_at_ms = j.at("created_at_ms").get<TimestampMs>();
        auto state = notification_state_from_string(j.at("state").get<std::string>());
        if (!state) throw Error(ErrorCode::ProtocolError, "state");
        n.state = *state;
        if (!j.at("message").is_null()) n.message = j.at("message").get<std::string>();
        if (!j.at("state_at_ms").is_null()) n.state_at_ms = j.at("state_at_ms").get<TimestampMs>();
        return n;
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ProtocolError, "notification", e.what());
    }
}

bool subscription_matches(const Subscription& s, const DetectionEvent& e) {
    if (s.device_id && *s.device_id != e.device_id) return false;
    if (e.detections.empty()) return !s.label && s.min_confidence == 0.0;
    return std::any_of(e.detections.begin(), e.detections.end(), [&](const Detection& d) {
        return (!s.label || d.label == *s.label) && d.confidence >= s.min_confidence;
    });
}

std::vector<Subscription> match_subscriptions(std::span<const Subscription> subs, const DetectionEvent& e) {
    std::vector<Subscription> out;
    for (const auto& s : subs)
        if (subscription_matches(s, e)) out.push_back(s);
    return out;
}

RespondAction respond_action_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("action") || !j["action"].is_string())
        throw Error(ErrorCode::BadRequest, "action", "expected {\"action\": \"respond\" | \"ignore\"}");
    RespondAction a;
    auto action = j["action"].get<std::string>();
    if (action == "ignore") {
        a.kind = RespondAction::Ignore;
    } else if (action == "respond") {
        a.kind = RespondAction::Respond;
        if (auto it = j.find("message"); it != j.end() && !it->is_null()) {
            if (!it->is_string()) throw Error(ErrorCode::BadRequest, "message", "expected string");
            a.message = it->get<std::string>();
        }
    } else {
        throw Error(ErrorCode::BadRequest, "action", "expected respond or ignore");
    }
    return a;
}

NotifyService::NotifyService(Journal* journal, std::shared_ptr<const Clock> clock, NotifyOptions options)
    : journal_(journal), clock_(std::move(clock)), options_(std::move(options)) {
    webhook_thread_ = std::thread([this] { webhook_loop(); });
}

NotifyService::~NotifyService() { shutdown(); }

void NotifyService::shutdown() {
    {
        std::lock_guard lock(webhook_mutex_);
        stopping_ = true;
    }
    webhook_cv_.notify_all();
    if (webhook_thread_.joinable()) webhook_thread_.join();
    broker_.close_all();
}

void NotifyService::replay(const Json& r) {
    const auto& type = r.at("type").get_ref<const std::string&>();
    std::lock_guard lock(mutex_);
    if (type == "sub_add") {
        auto s = subscription_from_json(r.at("subscription"));
        subs_[s.sub_id] = s;
    } else if (type == "sub_del") {
        subs_.erase(r.at("sub_id").get<std::string>());
    } else if (type == "notif") {
        auto n = notification_from_json(r.at("notification"));
        if (!notifs_.count(n.notif_id)) notif_order_.push_back(n.notif_id);
        notifs_[n.notif_id] = n;
    } else if (type == "notif_state") {
        auto it = notifs_.find(r.at("notif_id").get<std::string>());
        if (it == notifs_.end() || it->second.terminal()) return;
        auto state = notification_state_from_string(r.at("state").get<std::string>());
        if (!state) return;
        it->second.state = *state;
        it->second.state_at_ms = r.at("at_ms").get<TimestampMs>();
        if (!r.at("message").is_null()) it->second.message = r.at("message").get<std::string>();
    }
}

Subscription NotifyService::subscribe(Subscription s) {
    s.validate();
    s.sub_id = crypto::random_uuid();
    std::lock_guard lock(mutex_);
    if (journal_) journal_->append({{"type", "sub_add"}, {"subscription", to_json(s)}});
    subs_[s.sub_id] = s;
    return s;
}

void NotifyService::unsubscribe(const std::string& sub_id) {
    std::lock_guard lock(mutex_);
    if (!subs_.count(sub_id)) throw Error(ErrorCode::NotFound, "subscription", sub_id);
    if (journal_) journal_->append({{"type", "sub_del"}, {"sub_id", sub_id}});
    subs_.erase(sub_id);
}

std::vector<Subscription> NotifyService::subscriptions() const {
    std::lock_guard lock(mutex_);
    std::vector<Subscription> out;
    for (const auto& [_, s] : subs_) out.push_back(s);
    return out;
}

std::vector<Notification> NotifyService::notify(const EventRecord& record) {
    std::vector<std::pair<Notification, Subscription>> created;
    {
        std::lock_guard lock(mutex_);
        const auto now = clock_->now_ms();
        for (const auto& [_, s] : subs_) {
            if (!subscription_matches(s, record.event)) continue;
            Notification n;
            n.notif_id = crypto::random_uuid();
            n.sub_id = s.sub_id;
            n.subscriber_id = s.subscriber_id;
            n.event_id = record.event.event_id;
            n.created_at_ms = now;
            if (journal_) journal_->append({{"type", "notif"}, {"notification", to_json(n)}});
            notifs_[n.notif_id] = n;
            notif_order_.push_back(n.notif_id);
            created.emplace_back(std::move(n), s);
        }
    }
    std::vector<Notification> out;
    for (auto& [n, s] : created) {
        auto payload = to_json(n);
        payload["event"] = to_json(record);
        auto data = payload.dump();
        if (s.channel == ChannelKind::Push) {
            broker_.publish(s.subscriber_id, "notification", data);
        } else {
            {
                std::lock_guard lock(webhook_mutex_);
                webhook_jobs_.push({std::chrono::steady_clock::now(), s.url, data, n.notif_id, 0});
            }
            webhook_cv_.notify_all();
        }
        out.push_back(std::move(n));
    }
    return out;
}

void NotifyService::apply_transition(Notification& n, NotificationState to, std::optional<std::string> message,
                                     TimestampMs at) {
    if (journal_)
        journal_->append({{"type", "notif_state"},
                          {"notif_id", n.notif_id},
                          {"state", to_string(to)},
                          {"message", message ? Json(*message) : Json(nullptr)},
                          {"at_ms", at}});
    n.state = to;
    n.message = std::move(message);
    n.state_at_ms = at;
}

RespondOutcome NotifyService::respond(const std::string& notif_id, const RespondAction& action) {
    Notification snapshot;
    {
        std::lock_guard lock(mutex_);
        auto it = notifs_.find(notif_id);
        if (it == notifs_.end()) throw Error(ErrorCode::NotFound, "notification", notif_id);
        if (it->second.terminal()) return {false, it->second};
        if (action.kind == RespondAction::Respond)
            apply_transition(it->second, NotificationState::Responded, action.message, clock_->now_ms());
        else
            apply_transition(it->second, NotificationState::Ignored, std::nullopt, clock_->now_ms());
        snapshot = it->second;
    }
    broker_.publish(snapshot.subscriber_id, "state_change", to_json(snapshot).dump());
    return {true, snapshot};
}

std::size_t NotifyService::expire_pending(TimestampMs now_ms, TimestampMs ttl_ms) {
    std::vector<Notification> expired;
    {
        std::lock_guard lock(mutex_);
        for (auto& [_, n] : notifs_) {
            if (n.terminal() || now_ms - n.created_at_ms <= ttl_ms) continue;
            apply_transition(n, NotificationState::Expired, std::nullopt, now_ms);
            expired.push_back(n);
        }
    }
    for (const auto& n : expired) broker_.publish(n.subscriber_id, "state_change", to_json(n).dump());
    return expired.size();
}

std::vector<Notification> NotifyService::list(std::optional<NotificationState> state,
                                              std::optional<std::string> subscriber) const {
    std::lock_guard lock(mutex_);
    std::vector<Notification> out;
    for (const auto& id : notif_order_) {
        const auto& n = notifs_.at(id);
        if (state && n.state != *state) continue;
        if (subscriber && n.subscriber_id != *subscriber) continue;
        out.push_back(n);
    }
    return out;
}

std::optional<Notification> NotifyService::get(const std::string& notif_id) const {
    std::lock_guard lock(mutex_);
    auto it = notifs_.find(notif_id);
    if (it == notifs_.end()) return std::nullopt;
    return it->second;
}

std::size_t NotifyService::webhook_deliveries() const {
    std::lock_guard lock(webhook_mutex_);
    return webhook_ok_;
}

std::size_t NotifyService::webhook_failures() const {
    std::lock_guard lock(webhook_mutex_);
    return webhook_failed_;
}

void NotifyService::webhook_loop() {
    std::unique_lock lock(webhook_mutex_);
    for (;;) {
        if (stopping_) return;
        if (webhook_jobs_.empty()) {
            webhook_cv_.wait(lock);
            continue;
        }
        auto due = webhook_jobs_.top().due;
        if (std::chrono::steady_clock::now() < due) {
            webhook_cv_.wait_until(lock, due);
            continue;
        }
        auto job = webhook_jobs_.top();
        webhook_jobs_.pop();
        lock.unlock();

        auto url = net::split_url(job.url);
        net::HttpClient client(url.origin, std::chrono::milliseconds(options_.webhook_timeout_ms));
        auto res = client.request("POST", url.prefix.empty() ? "/" : url.prefix, job.payload, "application/json");

        lock.lock();
        if (res.ok()) {
            ++webhook_ok_;
            continue;
        }
        if (job.attempt < options_.webhook_retry_ms.size()) {
            auto delay = options_.webhook_retry_ms[job.attempt];
            spdlog::warn("webhook for {} failed ({}); retrying in {} ms", job.notif_id,
                         res.status ? std::to_string(res.status) : res.error, delay);
            job.due = std::chrono::steady_clock::now() + std::chrono::milliseconds(delay);
            ++job.attempt;
            webhook_jobs_.push(std::move(job));
        } else {
            ++webhook_failed_;
            spdlog::warn("webhook for {} gave up; notification stays pending", job.notif_id);
        }
    }
}

}  // namespace porch::hub

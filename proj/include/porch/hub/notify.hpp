#pragma once

#include "porch/core/clock.hpp"
#include "porch/core/query.hpp"
#include "porch/hub/journal.hpp"
#include "porch/hub/sse.hpp"

#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <span>
#include <thread>
#include <vector>

namespace porch::hub {

enum class ChannelKind { Push, Webhook };

struct Subscription {
    std::string sub_id;
    std::string subscriber_id;
    std::optional<std::string> device_id;
    std::optional<std::string> label;
    double min_confidence = 0.0;
    ChannelKind channel = ChannelKind::Push;
    std::string url;  // webhook only

    void validate() const;
    bool operator==(const Subscription&) const = default;
};

Json to_json(const Subscription& s);
/// sub_id may be absent (assigned on create). Throws BadRequest.
Subscription subscription_from_json(const Json& j);

enum class NotificationState { Pending, Responded, Ignored, Expired };

std::string to_string(NotificationState s);
std::optional<NotificationState> notification_state_from_string(std::string_view s);

struct Notification {
    std::string notif_id;
    std::string sub_id;
    std::string subscriber_id;
    std::string event_id;
    TimestampMs created_at_ms = 0;
    NotificationState state = NotificationState::Pending;
    std::optional<std::string> message;  // responded only
    std::optional<TimestampMs> state_at_ms;

    bool terminal() const noexcept { return state != NotificationState::Pending; }
    bool operator==(const Notification&) const = default;
};

Json to_json(const Notification& n);
Notification notification_from_json(const Json& j);

/// Device filter, then: with a label filter some detection has that label and
/// confidence >= min_confidence; without one some detection reaches
/// min_confidence. An event with no detections matches only subscriptions
/// with neither a label filter nor a confidence floor.
bool subscription_matches(const Subscription& s, const DetectionEvent& e);
std::vector<Subscription> match_subscriptions(std::span<const Subscription> subs, const DetectionEvent& e);

struct RespondAction {
    enum Kind { Respond, Ignore } kind = Ignore;
    std::string message;
};
/// Throws BadRequest.
RespondAction respond_action_from_json(const Json& j);

struct RespondOutcome {
    bool applied = false;  // false: it was already terminal
    Notification notification;
};

struct NotifyOptions {
    std::vector<TimestampMs> webhook_retry_ms{1'000, 4'000, 16'000};
    TimestampMs webhook_timeout_ms = 5'000;
};

/// Subscriptions, notification lifecycle and delivery over SSE and webhooks.
class NotifyService {
public:
    NotifyService(Journal* journal, std::shared_ptr<const Clock> clock, NotifyOptions options = {});
    ~NotifyService();

    void replay(const Json& record);

    Subscription subscribe(Subscription s);
    /// Throws NotFound.
    void unsubscribe(const std::string& sub_id);
    std::vector<Subscription> subscriptions() const;

    /// Store hook: creates and persists one pending notification per match,
    /// then hands them to their channels.
    std::vector<Notification> notify(const EventRecord& record);

    /// Throws NotFound. First transition wins.
    RespondOutcome respond(const std::string& notif_id, const RespondAction& action);

    /// Pending notifications created more than ttl_ms before now become expired.
    std::size_t expire_pending(TimestampMs now_ms, TimestampMs ttl_ms = 86'400'000);

    std::vector<Notification> list(std::optional<NotificationState> state = {},
                                   std::optional<std::string> subscriber = {}) const;
    std::optional<Notification> get(const std::string& notif_id) const;

    SseBroker& broker() noexcept { return broker_; }
    std::size_t webhook_deliveries() const;
    std::size_t webhook_failures() const;

    /// Stops the webhook worker; queued retries are abandoned (the
    /// notifications stay listed as pending).
    void shutdown();

private:
    struct WebhookJob {
        std::chrono::steady_clock::time_point due;
        std::string url;
        std::string payload;
        std::string notif_id;
        std::size_t attempt = 0;
        bool operator>(const WebhookJob& o) const { return due > o.due; }
    };

    void apply_transition(Notification& n, NotificationState to, std::optional<std::string> message, TimestampMs at);
    void webhook_loop();

    Journal* journal_;
    std::shared_ptr<const Clock> clock_;
    NotifyOptions options_;
    SseBroker broker_;

    mutable std::mutex mutex_;
    std::map<std::string, Subscription> subs_;
    std::map<std::string, Notification> notifs_;
    std::vector<std::string> notif_order_;

    mutable std::mutex webhook_mutex_;
    std::condition_variable webhook_cv_;
    std::priority_queue<WebhookJob, std::vector<WebhookJob>, std::greater<>> webhook_jobs_;
    bool stopping_ = false;
    std::size_t webhook_ok_ = 0;
    std::size_t webhook_failed_ = 0;
    std::thread webhook_thread_;
};

}  // namespace porch::hub

#include "porch/core/error.hpp"
#include "porch/core/segment.hpp"
#include "porch/core/signing.hpp"
#include "porch/hub/server.hpp"

#include "generators.hpp"
#include "query_oracle.hpp"
#include "temp_dir.hpp"

#include <doctest.h>
#include <httplib.h>

#include <barrier>
#include <fstream>
#include <random>
#include <thread>

using namespace porch;
using namespace porch::hub;
using porch::testing::TempDir;

namespace {

constexpr TimestampMs kT0 = 1'700'000'000'000;

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::HubError;
}

DetectionEvent make_event(const std::string& device, TimestampMs at, std::vector<Detection> dets,
                          std::string id = crypto::random_uuid()) {
    DetectionEvent e;
    e.event_id = std::move(id);
    e.device_id = device;
    e.captured_at_ms = at;
    e.detector_backend = "palette";
    e.detections = std::move(dets);
    return e;
}

Detection person(double conf, std::optional<Identity> id = std::nullopt) { return {"person", id, conf, {0, 0, 4, 4}}; }
Detection car(double conf) { return {"car", std::nullopt, conf, {0, 0, 4, 4}}; }

std::string one_frame_segment() {
    Frame f(4, 3, 5, 0);
    std::vector<Frame> v{f};
    return encode_segment(v);
}

/// Journal + blobs + services wired the way the server wires them.
struct Stack {
    explicit Stack(const std::filesystem::path& dir, TimestampMs now = kT0)
        : clock(std::make_shared<ManualClock>(now)),
          journal(dir / "journal.log", false),
          blobs(dir / "blobs", false),
          devices(&journal, clock),
          store(&journal, &blobs, clock),
          notify(&journal, clock, NotifyOptions{{10, 20, 30}, 1'000}),
          streams(devices, commands, clock) {
        for (const auto& r : journal.recovered()) {
            auto type = r.value("type", std::string());
            if (type == "device" || type == "revoke") devices.replay(r);
            else if (type == "event") store.replay(r);
            else notify.replay(r);
        }
        store.set_hook([this](const EventRecord& r) {
            ++hook_calls;
            notify.notify(r);
        });
    }

    std::shared_ptr<ManualClock> clock;
    Journal journal;
    BlobStore blobs;
    DeviceRegistry devices;
    EventStore store;
    NotifyService notify;
    CommandQueues commands;
    StreamService streams;
    std::atomic<int> hook_calls{0};
};

SignedRequest sign(const Enrollment& e, std::string_view method, std::string_view path, std::string_view body,
                   TimestampMs ts, std::string nonce = make_nonce()) {
    auto secret = crypto::from_hex(e.secret_hex);
    return sign_request(e.device_id, secret, method, path, body, ts, nonce);
}

}  // namespace

TEST_SUITE("journal") {
    TEST_CASE("records come back in order after reopening") {
        TempDir dir;
        {
            Journal j(dir / "j.log", false);
            CHECK(j.recovered().empty());
            for (int i = 0; i < 5; ++i) j.append({{"type", "x"}, {"i", i}});
        }
        Journal j(dir / "j.log", false);
        REQUIRE(j.recovered().size() == 5);
        for (int i = 0; i < 5; ++i) CHECK(j.recovered()[i]["i"] == i);
    }

    TEST_CASE("a torn final record is dropped and the log stays appendable") {
        TempDir dir;
        {
            Journal j(dir / "j.log", false);
            j.append({{"type", "x"}, {"i", 1}});
        }
        {
            std::ofstream f(dir / "j.log", std::ios::binary | std::ios::app);
            f.write("\x30\x00\x00\x00{\"ty", 8);
        }
        {
            Journal j(dir / "j.log", false);
            CHECK(j.recovered().size() == 1);
            j.append({{"type", "x"}, {"i", 2}});
        }
        Journal j(dir / "j.log", false);
        CHECK(j.recovered().size() == 2);
    }
}

TEST_SUITE("devices") {
    TEST_CASE("enrollments are distinct and listed") {
        TempDir dir;
        Stack s(dir.path());
        auto a = s.devices.enroll("front");
        auto b = s.devices.enroll("back");
        CHECK(a.device_id != b.device_id);
        CHECK(a.secret_hex != b.secret_hex);
        CHECK(a.secret_hex.size() == 64);
        CHECK(s.devices.list().size() == 2);
        CHECK(s.devices.active(a.device_id));
    }

    TEST_CASE("authentication outcomes") {
        TempDir dir;
        Stack s(dir.path());
        auto e = s.devices.enroll("front");
        auto now = s.clock->now_ms();

        auto ok = sign(e, "POST", "/v1/events", "body", now);
        CHECK(s.devices.authenticate(ok, "POST", "/v1/events", "body") == e.device_id);
        CHECK(code_of([&] { s.devices.authenticate(ok, "POST", "/v1/events", "body"); }) == ErrorCode::ReplayedNonce);

        auto tampered = sign(e, "POST", "/v1/events", "body", now);
        CHECK(code_of([&] { s.devices.authenticate(tampered, "POST", "/v1/events", "bodY"); }) == ErrorCode::BadSignature);

        auto old = sign(e, "POST", "/v1/events", "body", now - kMaxClockSkewMs - 1);
        CHECK(code_of([&] { s.devices.authenticate(old, "POST", "/v1/events", "body"); }) == ErrorCode::ClockSkew);

        auto stranger = ok;
        stranger.device_id = "nobody";
        stranger.nonce = make_nonce();
        CHECK(code_of([&] { s.devices.authenticate(stranger, "POST", "/v1/events", "body"); }) == ErrorCode::BadSignature);

        s.devices.revoke(e.device_id);
        auto after = sign(e, "POST", "/v1/events", "body", now);
        CHECK(code_of([&] { s.devices.authenticate(after, "POST", "/v1/events", "body"); }) == ErrorCode::Revoked);
        CHECK(code_of([&] { s.devices.revoke("nobody"); }) == ErrorCode::NotFound);
    }

    TEST_CASE("a rejected signature does not burn its nonce") {
        TempDir dir;
        Stack s(dir.path());
        auto e = s.devices.enroll("front");
        auto nonce = make_nonce();
        auto req = sign(e, "GET", "/a", "", s.clock->now_ms(), nonce);
        CHECK(code_of([&] { s.devices.authenticate(req, "GET", "/b", ""); }) == ErrorCode::BadSignature);
        CHECK(s.devices.authenticate(req, "GET", "/a", "") == e.device_id);
    }

    TEST_CASE("registry and revocations survive a restart") {
        TempDir dir;
        Enrollment a, b;
        {
            Stack s(dir.path());
            a = s.devices.enroll("front");
            b = s.devices.enroll("back");
            s.devices.revoke(b.device_id);
        }
        Stack s(dir.path());
        CHECK(s.devices.active(a.device_id));
        CHECK_FALSE(s.devices.active(b.device_id));
        auto req = sign(a, "GET", "/x", "", s.clock->now_ms());
        CHECK(s.devices.authenticate(req, "GET", "/x", "") == a.device_id);
    }
}

TEST_SUITE("event store") {
    TEST_CASE("store, duplicate, mismatch") {
        TempDir dir;
        Stack s(dir.path());
        auto e = make_event("dev", kT0, {person(0.5)});
        auto r1 = s.store.ingest("dev", e);
        CHECK(r1.status == IngestStatus::Stored);
        CHECK(r1.record.seq == 1);
        CHECK(r1.record.received_at_ms == kT0);
        auto r2 = s.store.ingest("dev", e);
        CHECK(r2.status == IngestStatus::Duplicate);
        CHECK(s.store.size() == 1);
        CHECK(s.hook_calls == 1);
        CHECK(code_of([&] { s.store.ingest("other", make_event("dev", kT0, {})); }) == ErrorCode::DeviceMismatch);
    }

    TEST_CASE("invalid event is rejected") {
        TempDir dir;
        Stack s(dir.path());
        auto e = make_event("dev", kT0, {person(1.5)});
        CHECK(code_of([&] { s.store.ingest("dev", e); }) == ErrorCode::InvariantViolation);
        CHECK(s.store.size() == 0);
    }

    TEST_CASE("snapshots round-trip and are checked") {
        TempDir dir;
        Stack s(dir.path());
        auto seg = one_frame_segment();
        auto e = make_event("dev", kT0, {person(0.5)});
        s.store.ingest("dev", e, seg);
        CHECK(s.store.snapshot(e.event_id) == std::optional<std::string>(seg));
        CHECK(s.store.get(e.event_id)->event.snapshot_ref == std::optional<std::string>(crypto::sha256_hex(seg)));
        CHECK_FALSE(s.store.snapshot("missing"));

        auto bad = make_event("dev", kT0, {});
        CHECK(code_of([&] { s.store.ingest("dev", bad, std::string("not a segment")); }) == ErrorCode::BadContainer);
        auto lying = make_event("dev", kT0, {});
        lying.snapshot_ref = std::string(64, 'f');
        CHECK(code_of([&] { s.store.ingest("dev", lying, seg); }) == ErrorCode::InvariantViolation);
    }

    TEST_CASE("label filter newest first: person at t3 then t1") {
        TempDir dir;
        Stack s(dir.path());
        auto a = make_event("dev", kT0 + 1, {person(0.5)});
        auto b = make_event("dev", kT0 + 2, {car(0.5)});
        auto c = make_event("dev", kT0 + 3, {person(0.5)});
        for (const auto& e : {a, b, c}) s.store.ingest("dev", e);
        QueryFilter f;
        f.label = "person";
        auto out = s.store.query(f);
        REQUIRE(out.size() == 2);
        CHECK(out[0].event.event_id == c.event_id);
        CHECK(out[1].event.event_id == a.event_id);
        CHECK(s.store.query(QueryFilter{}).size() == 3);
    }

    TEST_CASE("max_events evicts oldest capture time and survives replay") {
        TempDir dir;
        auto clock = std::make_shared<ManualClock>(kT0);
        std::vector<DetectionEvent> evs;
        for (TimestampMs at : {30, 10, 40, 20, 50}) evs.push_back(make_event(at % 20 ? "a" : "b", kT0 + at, {person(0.5)}));
        auto ids = [](const std::vector<EventRecord>& rs) {
            std::vector<TimestampMs> out;
            for (const auto& r : rs) out.push_back(r.event.captured_at_ms - kT0);
            return out;
        };
        QueryFilter oldest_first;
        oldest_first.order = Order::OldestFirst;
        {
            Journal journal(dir.path() / "journal.log", false);
            EventStore store(&journal, nullptr, clock, 3);
            for (const auto& e : evs) CHECK(store.ingest(e.device_id, e).status == IngestStatus::Stored);
            CHECK(store.size() == 3);
            CHECK(ids(store.query(oldest_first)) == std::vector<TimestampMs>{30, 40, 50});
            CHECK_FALSE(store.get(evs[1].event_id));
            QueryFilter by_b;
            by_b.device_id = "b";
            CHECK(ids(store.query(by_b)) == std::vector<TimestampMs>{40});
            CHECK(store.summarize(QueryFilter{}).total_events == 3);
        }
        Journal journal(dir.path() / "journal.log", false);
        EventStore replayed(nullptr, nullptr, clock);
        for (const auto& r : journal.recovered()) replayed.replay(r);
        CHECK(replayed.size() == 3);
        CHECK(ids(replayed.query(oldest_first)) == std::vector<TimestampMs>{30, 40, 50});
    }

    TEST_CASE("max_events config key") {
        CHECK(parse_hub_config("").max_events == 0);
        CHECK(parse_hub_config("max_events = 1000").max_events == 1000);
        CHECK(code_of([] { parse_hub_config("max_events = -1"); }) == ErrorCode::BadConfig);
    }

    TEST_CASE("summary of two known people and a car") {
        TempDir dir;
        Stack s(dir.path());
        s.store.ingest("dev", make_event("dev", kT0 + 10, {person(0.5, Identity{true, "alice"})}));
        s.store.ingest("dev", make_event("dev", kT0 + 20, {person(0.5, Identity{true, "bob"})}));
        s.store.ingest("dev", make_event("dev", kT0 + 30, {car(0.7)}));
        auto sum = s.store.summarize(QueryFilter{});
        CHECK(sum.total_events == 3);
        CHECK(sum.counts_by_label == std::map<std::string, std::size_t>{{"person", 2}, {"car", 1}});
        CHECK(sum.known_count == 2);
        CHECK(sum.unknown_count == 0);
        CHECK(sum.first_event_ms == kT0 + 10);
        CHECK(sum.last_event_ms == kT0 + 30);

        QueryFilter none;
        none.from_ms = 0;
        none.to_ms = 1;
        auto empty = s.store.summarize(none);
        CHECK(empty.total_events == 0);
        CHECK(empty.counts_by_label.empty());
        CHECK_FALSE(empty.first_event_ms);
        CHECK_FALSE(empty.last_event_ms);
    }

    TEST_CASE("random stores agree with the naive oracle") {
        TempDir dir;
        Stack s(dir.path());
        std::mt19937_64 rng(2024);
        std::vector<std::string> devices{"dev-a", "dev-b", "dev-c"};
        std::vector<EventRecord> all;
        for (int i = 0; i < 400; ++i) {
            auto e = canonicalize(porch::testing::random_event(rng, devices, kT0, 3'600'000));
            // Collisions on captured_at exercise the seq tiebreak.
            if (i % 7 == 0 && !all.empty()) e.captured_at_ms = all.back().event.captured_at_ms;
            auto r = s.store.ingest(e.device_id, e);
            all.push_back(r.record);
        }
        for (int i = 0; i < 150; ++i) {
            auto f = porch::testing::random_filter(rng, devices, kT0, 3'600'000);
            CAPTURE(to_query_string(f));
            CHECK(s.store.query(f) == porch::testing::oracle_query(all, f));
            f.limit = kMaxQueryLimit;
            CHECK(s.store.summarize(f) == porch::testing::oracle_summary(all, f));
        }
    }

    TEST_CASE("events and snapshots survive a restart") {
        TempDir dir;
        std::vector<EventRecord> before;
        auto seg = one_frame_segment();
        {
            Stack s(dir.path());
            for (int i = 0; i < 20; ++i)
                s.store.ingest("dev", make_event("dev", kT0 + i, {person(0.5)}), i % 2 ? std::optional(seg) : std::nullopt);
            QueryFilter f;
            f.limit = kMaxQueryLimit;
            before = s.store.query(f);
        }
        Stack s(dir.path());
        QueryFilter f;
        f.limit = kMaxQueryLimit;
        CHECK(s.store.query(f) == before);
        CHECK(s.store.snapshot(before.front().event.event_id) == std::optional<std::string>(seg));
        auto r = s.store.ingest("dev", make_event("dev", kT0 + 100, {}));
        CHECK(r.record.seq == 21);
        CHECK(s.hook_calls == 1);
    }

    TEST_CASE("concurrent duplicates store one record and fire the hook once") {
        TempDir dir;
        Stack s(dir.path());
        auto e = make_event("dev", kT0, {person(0.9)});
        std::atomic<int> stored{0};
        std::barrier sync(8);
        std::vector<std::jthread> threads;
        for (int t = 0; t < 8; ++t)
            threads.emplace_back([&] {
                sync.arrive_and_wait();
                for (int i = 0; i < 20; ++i)
                    if (s.store.ingest("dev", e).status == IngestStatus::Stored) ++stored;
            });
        threads.clear();
        CHECK(stored == 1);
        CHECK(s.store.size() == 1);
        CHECK(s.hook_calls == 1);
    }
}

TEST_SUITE("commands") {
    TEST_CASE("queued commands come back in order and are consumed") {
        CommandQueues q;
        q.push("dev", StartStream{"s1"});
        q.push("dev", StopStream{"s1"});
        auto got = q.take("dev", std::chrono::milliseconds(0));
        REQUIRE(got.size() == 2);
        CHECK(std::holds_alternative<StartStream>(got[0]));
        CHECK(std::holds_alternative<StopStream>(got[1]));
        CHECK(q.take("dev", std::chrono::milliseconds(0)).empty());
    }

    TEST_CASE("an empty wait times out; a push wakes a waiter") {
        CommandQueues q;
        auto start = std::chrono::steady_clock::now();
        CHECK(q.take("dev", std::chrono::milliseconds(150)).empty());
        CHECK(std::chrono::steady_clock::now() - start >= std::chrono::milliseconds(140));

        std::jthread pusher([&] {
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
            q.push("dev", UpdatePolicy{0.5});
        });
        start = std::chrono::steady_clock::now();
        auto got = q.take("dev", std::chrono::seconds(5));
        CHECK(got.size() == 1);
        CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(2));
    }
}

TEST_SUITE("sse") {
    TEST_CASE("wire format") {
        CHECK(format_sse({7, "notification", "{\"a\":1}"}) == "id: 7\nevent: notification\ndata: {\"a\":1}\n\n");
    }

    TEST_CASE("late attach replays what came after Last-Event-ID") {
        SseBroker b;
        b.publish("me", "notification", "1");
        b.publish("other", "notification", "x");
        b.publish("me", "notification", "2");
        auto s = b.attach("me", 1);
        auto m = s->pop_for(std::chrono::milliseconds(10));
        REQUIRE(m);
        CHECK(m->data == "2");
        CHECK_FALSE(s->pop_for(std::chrono::milliseconds(10)));
        b.publish("me", "state_change", "3");
        m = s->pop_for(std::chrono::milliseconds(100));
        REQUIRE(m);
        CHECK(m->event == "state_change");
        CHECK(b.connections("me") == 1);
        s.reset();
        CHECK(b.connections("me") == 0);
    }
}

TEST_SUITE("notify") {
    Subscription sub(std::optional<std::string> label, double min_conf, std::optional<std::string> device = {}) {
        Subscription s;
        s.subscriber_id = "me";
        s.label = std::move(label);
        s.min_confidence = min_conf;
        s.device_id = std::move(device);
        return s;
    }

    TEST_CASE("match examples") {
        auto s = sub("person", 0.4);
        CHECK(subscription_matches(s, make_event("dev", 0, {person(0.5)})));
        CHECK_FALSE(subscription_matches(s, make_event("dev", 0, {person(0.3)})));
        CHECK_FALSE(subscription_matches(s, make_event("dev", 0, {})));
        CHECK(subscription_matches(sub(std::nullopt, 0.0), make_event("dev", 0, {})));
        CHECK_FALSE(subscription_matches(sub(std::nullopt, 0.1), make_event("dev", 0, {})));
        CHECK_FALSE(subscription_matches(sub(std::nullopt, 0.0, "a"), make_event("b", 0, {person(1)})));
        // The person is weak and the car is strong: no single detection qualifies.
        CHECK_FALSE(subscription_matches(s, make_event("dev", 0, {person(0.3), car(0.9)})));
        CHECK(match_subscriptions({}, make_event("dev", 0, {person(1)})).empty());
    }

    TEST_CASE("matching agrees with a literal predicate on random inputs") {
        std::mt19937_64 rng(99);
        std::vector<std::string> devices{"dev-a", "dev-b"};
        for (int i = 0; i < 3'000; ++i) {
            auto e = porch::testing::random_event(rng, devices);
            Subscription s;
            s.subscriber_id = "x";
            if (rng() % 2) s.device_id = devices[rng() % 2];
            if (rng() % 2) s.label = porch::testing::labels()[rng() % porch::testing::labels().size()];
            s.min_confidence = rng() % 3 == 0 ? 0.0 : static_cast<double>(rng() % 1'000'001) / 1e6;
            bool expect = true;
            if (s.device_id && *s.device_id != e.device_id) expect = false;
            if (e.detections.empty()) {
                expect = expect && !s.label && s.min_confidence == 0.0;
            } else {
                bool some = false;
                for (const auto& d : e.detections)
                    some = some || ((!s.label || d.label == *s.label) && d.confidence >= s.min_confidence);
                expect = expect && some;
            }
            CHECK(subscription_matches(s, e) == expect);
        }
    }

    TEST_CASE("subscription validation") {
        auto bad = sub("person", 1.5);
        CHECK(code_of([&] { bad.validate(); }) == ErrorCode::BadRequest);
        Subscription hook = sub(std::nullopt, 0);
        hook.channel = ChannelKind::Webhook;
        CHECK(code_of([&] { hook.validate(); }) == ErrorCode::BadRequest);
        CHECK(code_of([] { subscription_from_json(Json{{"channel", "fax"}, {"subscriber_id", "x"}}); }) ==
              ErrorCode::BadRequest);
        hook.url = "http://127.0.0.1:1/h";
        hook.sub_id = "s";
        CHECK(subscription_from_json(to_json(hook)) == hook);
    }

    TEST_CASE("two matching subscriptions give two notifications for one event") {
        TempDir dir;
        Stack s(dir.path());
        s.notify.subscribe(sub("person", 0.0));
        s.notify.subscribe(sub(std::nullopt, 0.2));
        s.notify.subscribe(sub("car", 0.0));
        auto e = make_event("dev", kT0, {person(0.5)});
        s.store.ingest("dev", e);
        s.store.ingest("dev", e);
        auto all = s.notify.list();
        REQUIRE(all.size() == 2);
        CHECK(all[0].notif_id != all[1].notif_id);
        CHECK(all[0].event_id == e.event_id);
        CHECK(all[1].event_id == e.event_id);
        CHECK(all[0].state == NotificationState::Pending);
    }

    TEST_CASE("respond and ignore are one-shot") {
        TempDir dir;
        Stack s(dir.path());
        s.notify.subscribe(sub(std::nullopt, 0.0));
        s.store.ingest("dev", make_event("dev", kT0, {person(0.5)}));
        auto id = s.notify.list().front().notif_id;

        s.clock->advance(1'000);
        auto r = s.notify.respond(id, {RespondAction::Respond, "on my way"});
        CHECK(r.applied);
        CHECK(r.notification.state == NotificationState::Responded);
        CHECK(r.notification.message == std::optional<std::string>("on my way"));
        CHECK(r.notification.state_at_ms == kT0 + 1'000);

        auto again = s.notify.respond(id, {RespondAction::Ignore, ""});
        CHECK_FALSE(again.applied);
        CHECK(again.notification.state == NotificationState::Responded);
        CHECK(code_of([&] { s.notify.respond("missing", {}); }) == ErrorCode::NotFound);
    }

    TEST_CASE("state changes are broadcast to the subscriber") {
        TempDir dir;
        Stack s(dir.path());
        s.notify.subscribe(sub(std::nullopt, 0.0));
        auto stream = s.notify.broker().attach("me");
        s.store.ingest("dev", make_event("dev", kT0, {person(0.5)}));
        auto m = stream->pop_for(std::chrono::seconds(1));
        REQUIRE(m);
        CHECK(m->event == "notification");
        auto payload = Json::parse(m->data);
        CHECK(payload["state"] == "pending");
        CHECK(payload["event"]["event_id"].is_string());
        s.notify.respond(payload["notif_id"], {RespondAction::Ignore, ""});
        m = stream->pop_for(std::chrono::seconds(1));
        REQUIRE(m);
        CHECK(m->event == "state_change");
        CHECK(Json::parse(m->data)["state"] == "ignored");
    }

    TEST_CASE("concurrent respond and ignore: exactly one wins") {
        TempDir dir;
        Stack s(dir.path());
        s.notify.subscribe(sub(std::nullopt, 0.0));
        for (int round = 0; round < 50; ++round) {
            s.store.ingest("dev", make_event("dev", kT0 + round, {person(0.5)}));
            auto pending = s.notify.list(NotificationState::Pending);
            REQUIRE(pending.size() == 1);
            auto id = pending.front().notif_id;
            std::atomic<int> wins{0};
            std::barrier sync(2);
            {
                std::jthread a([&] {
                    sync.arrive_and_wait();
                    if (s.notify.respond(id, {RespondAction::Respond, "hi"}).applied) ++wins;
                });
                std::jthread b([&] {
                    sync.arrive_and_wait();
                    if (s.notify.respond(id, {RespondAction::Ignore, ""}).applied) ++wins;
                });
            }
            CHECK(wins == 1);
            CHECK(s.notify.get(id)->terminal());
        }
    }

    TEST_CASE("expiry after the ttl, idempotent") {
        TempDir dir;
        Stack s(dir.path());
        s.notify.subscribe(sub(std::nullopt, 0.0));
        s.store.ingest("dev", make_event("dev", kT0, {person(0.5)}));
        CHECK(s.notify.expire_pending(kT0 + 1'000, 86'400'000) == 0);
        CHECK(s.notify.expire_pending(kT0 + 25 * 3'600'000LL, 86'400'000) == 1);
        CHECK(s.notify.expire_pending(kT0 + 25 * 3'600'000LL, 86'400'000) == 0);
        auto n = s.notify.list().front();
        CHECK(n.state == NotificationState::Expired);
        CHECK_FALSE(s.notify.respond(n.notif_id, {RespondAction::Ignore, ""}).applied);
    }

    TEST_CASE("random call sequences never leave a terminal state") {
        TempDir dir;
        Stack s(dir.path());
        s.notify.subscribe(sub(std::nullopt, 0.0));
        std::mt19937_64 rng(5);
        std::map<std::string, Notification> first_terminal;
        for (int step = 0; step < 2'000; ++step) {
            auto all = s.notify.list();
            switch (rng() % 5) {
                case 0: s.store.ingest("dev", make_event("dev", kT0 + step, {person(0.5)})); break;
                case 1:
                case 2:
                    if (!all.empty()) {
                        auto& n = all[rng() % all.size()];
                        RespondAction a{rng() % 2 ? RespondAction::Respond : RespondAction::Ignore, "m"};
                        auto out = s.notify.respond(n.notif_id, a);
                        CHECK(out.applied == !n.terminal());
                    }
                    break;
                case 3: s.clock->advance(static_cast<TimestampMs>(rng() % 3'600'000)); break;
                case 4: s.notify.expire_pending(s.clock->now_ms(), 3 * 3'600'000); break;
            }
            for (const auto& n : s.notify.list()) {
                if (!n.terminal()) continue;
                auto [it, fresh] = first_terminal.emplace(n.notif_id, n);
                if (!fresh) CHECK(it->second == n);
            }
        }
        CHECK(first_terminal.size() > 10);
    }

    TEST_CASE("subscriptions and notification states survive a restart") {
        TempDir dir;
        std::vector<Notification> before;
        {
            Stack s(dir.path());
            auto a = s.notify.subscribe(sub("person", 0.0));
            auto b = s.notify.subscribe(sub("car", 0.0));
            s.notify.unsubscribe(b.sub_id);
            for (int i = 0; i < 3; ++i) s.store.ingest("dev", make_event("dev", kT0 + i, {person(0.5)}));
            auto all = s.notify.list();
            s.notify.respond(all[0].notif_id, {RespondAction::Respond, "x"});
            s.notify.respond(all[1].notif_id, {RespondAction::Ignore, ""});
            before = s.notify.list();
        }
        Stack s(dir.path());
        CHECK(s.notify.subscriptions().size() == 1);
        CHECK(s.notify.list() == before);
        CHECK(s.notify.list(NotificationState::Pending).size() == 1);
    }

    TEST_CASE("webhooks: delivered after retries, or left pending") {
        httplib::Server hook;
        std::atomic<int> hits{0};
        std::atomic<int> fail_first{2};
        std::mutex m;
        std::vector<std::string> bodies;
        hook.Post("/hook", [&](const httplib::Request& req, httplib::Response& res) {
            ++hits;
            {
                std::lock_guard lock(m);
                bodies.push_back(req.body);
            }
            res.status = fail_first-- > 0 ? 503 : 204;
        });
        int port = hook.bind_to_any_port("127.0.0.1");
        std::jthread t([&] { hook.listen_after_bind(); });

        TempDir dir;
        Stack s(dir.path());
        auto hs = sub(std::nullopt, 0.0);
        hs.channel = ChannelKind::Webhook;
        hs.url = "http://127.0.0.1:" + std::to_string(port) + "/hook";
        s.notify.subscribe(hs);
        s.store.ingest("dev", make_event("dev", kT0, {person(0.5)}));
        for (int i = 0; i < 100 && s.notify.webhook_deliveries() == 0; ++i)
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        CHECK(s.notify.webhook_deliveries() == 1);
        CHECK(hits == 3);
        {
            std::lock_guard lock(m);
            auto j = Json::parse(bodies.back());
            CHECK(j["notif_id"] == s.notify.list().front().notif_id);
        }

        // Always failing: initial try plus three retries, then it stays pending.
        fail_first = 1'000;
        hits = 0;
        s.store.ingest("dev", make_event("dev", kT0 + 1, {person(0.5)}));
        for (int i = 0; i < 200 && s.notify.webhook_failures() == 0; ++i)
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        CHECK(s.notify.webhook_failures() == 1);
        CHECK(hits == 4);
        CHECK(s.notify.list(NotificationState::Pending).size() == 2);
        hook.stop();
    }
}

TEST_SUITE("streams") {
    struct StreamFixture {
        TempDir dir;
        Stack s{dir.path()};
        Enrollment dev = s.devices.enroll("front");
        std::string seg = one_frame_segment();
    };

    TEST_CASE("request queues StartStream once and is idempotent while open") {
        StreamFixture f;
        auto a = f.s.streams.request_stream(f.dev.device_id);
        CHECK(a.state == SessionState::Requested);
        auto b = f.s.streams.request_stream(f.dev.device_id);
        CHECK(a.session_id == b.session_id);
        auto cmds = f.s.commands.take(f.dev.device_id, std::chrono::milliseconds(0));
        REQUIRE(cmds.size() == 1);
        CHECK(std::get<StartStream>(cmds[0]).session_id == a.session_id);
        CHECK(code_of([&] { f.s.streams.request_stream("nobody"); }) == ErrorCode::NotFound);
        CHECK(to_json(a)["playlist_url"] == "/v1/streams/" + a.session_id + "/playlist");
    }

    TEST_CASE("segments 0, 1, 2 make the session live") {
        StreamFixture f;
        auto sess = f.s.streams.request_stream(f.dev.device_id);
        auto empty = f.s.streams.playlist(sess.session_id);
        CHECK(empty == "#PORCHM3U\n#VERSION:1\n#MEDIA-SEQUENCE:0\n");
        for (std::uint64_t q = 0; q < 3; ++q) f.s.streams.append_segment(sess.session_id, f.dev.device_id, q, f.seg);
        CHECK(f.s.streams.get(sess.session_id)->state == SessionState::Live);
        CHECK(*f.s.streams.segment(sess.session_id, 1) == f.seg);
    }

    TEST_CASE("append errors") {
        StreamFixture f;
        auto sess = f.s.streams.request_stream(f.dev.device_id);
        auto other = f.s.devices.enroll("back");
        CHECK(code_of([&] { f.s.streams.append_segment(sess.session_id, f.dev.device_id, 0, "junk"); }) ==
              ErrorCode::BadContainer);
        CHECK(code_of([&] { f.s.streams.append_segment(sess.session_id, other.device_id, 0, f.seg); }) ==
              ErrorCode::DeviceMismatch);
        CHECK(code_of([&] { f.s.streams.append_segment("nope", f.dev.device_id, 0, f.seg); }) == ErrorCode::NotFound);
        f.s.streams.append_segment(sess.session_id, f.dev.device_id, 5, f.seg);
        CHECK(code_of([&] { f.s.streams.append_segment(sess.session_id, f.dev.device_id, 3, f.seg); }) ==
              ErrorCode::NonMonotonicSeq);
        CHECK(code_of([&] { f.s.streams.append_segment(sess.session_id, f.dev.device_id, 5, f.seg); }) ==
              ErrorCode::NonMonotonicSeq);
        f.s.streams.append_segment(sess.session_id, f.dev.device_id, 9, f.seg);
    }

    TEST_CASE("ring keeps ten; playlist lists them in order") {
        StreamFixture f;
        auto sess = f.s.streams.request_stream(f.dev.device_id);
        std::uint64_t last_media_seq = 0;
        for (std::uint64_t q = 0; q < 25; ++q) {
            f.s.streams.append_segment(sess.session_id, f.dev.device_id, q, f.seg);
            auto text = f.s.streams.playlist(sess.session_id);
            auto pos = text.find("#MEDIA-SEQUENCE:");
            auto media = std::stoull(text.substr(pos + 16));
            CHECK(media >= last_media_seq);
            last_media_seq = media;
        }
        auto text = f.s.streams.playlist(sess.session_id);
        std::string expected = "#PORCHM3U\n#VERSION:1\n#MEDIA-SEQUENCE:15\n";
        for (int q = 15; q < 25; ++q)
            expected += "#DURATION:0\n/v1/streams/" + sess.session_id + "/segments/" + std::to_string(q) + "\n";
        CHECK(text == expected);
        CHECK(code_of([&] { f.s.streams.segment(sess.session_id, 14); }) == ErrorCode::NotFound);
        CHECK(f.s.streams.get(sess.session_id)->segments.size() == kSegmentRing);
    }

    TEST_CASE("silent viewer is reaped once; StopStream queued once") {
        StreamFixture f;
        auto sess = f.s.streams.request_stream(f.dev.device_id);
        f.s.commands.take(f.dev.device_id, std::chrono::milliseconds(0));
        f.s.streams.append_segment(sess.session_id, f.dev.device_id, 0, f.seg);
        // Viewer polling every 2 s and segments flowing: never reaped.
        for (int i = 0; i < 30; ++i) {
            f.s.clock->advance(2'000);
            f.s.streams.playlist(sess.session_id);
            f.s.streams.append_segment(sess.session_id, f.dev.device_id, i + 1, f.seg);
            CHECK(f.s.streams.reap(f.s.clock->now_ms()) == 0);
        }
        f.s.clock->advance(31'000);
        CHECK(f.s.streams.reap(f.s.clock->now_ms()) == 1);
        CHECK(f.s.streams.reap(f.s.clock->now_ms()) == 0);
        auto cmds = f.s.commands.take(f.dev.device_id, std::chrono::milliseconds(0));
        REQUIRE(cmds.size() == 1);
        CHECK(std::get<StopStream>(cmds[0]).session_id == sess.session_id);
        CHECK(f.s.streams.playlist(sess.session_id).ends_with("#ENDLIST\n"));
        CHECK(code_of([&] { f.s.streams.append_segment(sess.session_id, f.dev.device_id, 99, f.seg); }) ==
              ErrorCode::Gone);
        // A new request after the end opens a fresh session.
        CHECK(f.s.streams.request_stream(f.dev.device_id).session_id != sess.session_id);
    }

    TEST_CASE("a live session whose edge went quiet is reaped") {
        StreamFixture f;
        auto sess = f.s.streams.request_stream(f.dev.device_id);
        f.s.streams.append_segment(sess.session_id, f.dev.device_id, 0, f.seg);
        for (int i = 0; i < 16; ++i) {
            f.s.clock->advance(2'000);
            f.s.streams.playlist(sess.session_id);
        }
        CHECK(f.s.streams.reap(f.s.clock->now_ms()) == 1);
        CHECK(f.s.streams.get(sess.session_id)->state == SessionState::Ended);
    }
}

TEST_SUITE("http status mapping") {
    TEST_CASE("codes") {
        CHECK(http_status(ErrorCode::BadSignature) == 401);
        CHECK(http_status(ErrorCode::ReplayedNonce) == 401);
        CHECK(http_status(ErrorCode::Revoked) == 401);
        CHECK(http_status(ErrorCode::ClockSkew) == 401);
        CHECK(http_status(ErrorCode::Unauthorized) == 401);
        CHECK(http_status(ErrorCode::DeviceMismatch) == 403);
        CHECK(http_status(ErrorCode::NotFound) == 404);
        CHECK(http_status(ErrorCode::AlreadyTerminal) == 409);
        CHECK(http_status(ErrorCode::NonMonotonicSeq) == 409);
        CHECK(http_status(ErrorCode::Gone) == 410);
        CHECK(http_status(ErrorCode::BadContainer) == 400);
        CHECK(http_status(ErrorCode::BadFilter) == 400);
        CHECK(error_body(ErrorCode::NotFound, "x") == Json{{"error", {{"code", "NotFound"}, {"message", "x"}}}});
    }
}

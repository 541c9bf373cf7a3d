#include "porch/core/crypto.hpp"

#include "live_hub.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <sstream>

using namespace porch;
using namespace porch::testing;

namespace {

struct Run {
    int exit_code = -1;
    std::string out;
};

// stderr goes to /dev/null so `out` holds exactly what the command printed for the user.
Run porch_cli(const std::string& args, const std::string& env = "") {
    std::string cmd = env + " " + PORCH_CLI_PATH + " " + args + " 2>/dev/null </dev/null";
    Run r;
    FILE* p = ::popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    int status = ::pclose(p);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string hub_env(const LiveHub& hub) {
    return "PORCH_HUB=" + hub.url() + " PORCH_USER_TOKEN=" + kUserToken + " PORCH_ADMIN_TOKEN=" + kAdminToken;
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);)
        if (!l.empty()) out.push_back(l);
    return out;
}

}  // namespace

TEST_CASE("every command prints help and exits 0") {
    for (const char* cmd :
         {"", "hub serve", "edge run", "detector serve", "admin enroll", "admin devices", "admin revoke", "events query",
          "events summary", "events get", "events snapshot", "ask", "notify tail", "notify subscribe", "notify unsubscribe",
          "notify list", "notify respond", "notify ignore", "stream request", "policy"}) {
        CAPTURE(cmd);
        auto r = porch_cli(std::string(cmd) + " --help");
        CHECK(r.exit_code == 0);
        CHECK(r.out.find("Usage") != std::string::npos);
    }
}

TEST_CASE("usage errors exit 1") {
    CHECK(porch_cli("").exit_code == 1);
    CHECK(porch_cli("frobnicate").exit_code == 1);
    CHECK(porch_cli("events query --limit 0").exit_code == 1);
}

TEST_CASE("ask on an empty hub") {
    LiveHub hub;
    auto r = porch_cli("ask \"What is happening at the door\"", hub_env(hub));
    CHECK(r.exit_code == 0);
    CHECK(r.out == "No activity in the last 15 minutes.\n");

    auto j = porch_cli("--json ask \"what happened today\"", hub_env(hub));
    CHECK(j.exit_code == 0);
    CHECK(Json::parse(j.out)["intent"]["type"] == "activity_report");

    auto bad = porch_cli("--json ask \"sing me a song\"", hub_env(hub));
    CHECK(bad.exit_code == 1);
    CHECK(Json::parse(bad.out)["error"]["code"] == "ParseError");
}

TEST_CASE("exit codes for auth, connection and not-found") {
    LiveHub hub;
    CHECK(porch_cli("events query --user-token wrong", hub_env(hub)).exit_code == 3);
    CHECK(porch_cli("admin devices --admin-token wrong", hub_env(hub)).exit_code == 3);
    CHECK(porch_cli("events get no-such-event", hub_env(hub)).exit_code == 4);

    auto port = hub.server().port();
    hub.stop();
    auto down = porch_cli("--json events query --hub http://127.0.0.1:" + std::to_string(port),
                          "PORCH_USER_TOKEN=x");
    CHECK(down.exit_code == 2);
    CHECK(Json::parse(down.out)["error"]["code"] == "ConnectionFailed");
}

TEST_CASE("enroll, then events query output matches the HTTP API") {
    LiveHub hub;
    auto enrolled = porch_cli("--json admin enroll --name porch", hub_env(hub));
    REQUIRE(enrolled.exit_code == 0);
    auto creds = Json::parse(enrolled.out);
    DeviceCreds dev{creds["device_id"], creds["secret"]};

    auto client = hub.device_client(dev);
    for (int i = 0; i < 5; ++i) {
        DetectionEvent e;
        e.event_id = crypto::random_uuid();
        e.device_id = dev.device_id;
        e.captured_at_ms = 1'000 + i;
        e.detector_backend = "palette";
        if (i % 2 == 0) e.detections.push_back({"person", std::nullopt, 0.5, {0, 0, 2, 2}});
        REQUIRE(client.upload(e, std::nullopt) == edge::UploadResult::Stored);
    }

    auto r = porch_cli("--json events query --label person", hub_env(hub));
    REQUIRE(r.exit_code == 0);
    auto http = Json::parse(hub.user().request("GET", "/v1/events?label=person").body)["events"];
    auto got = lines(r.out);
    REQUIRE(got.size() == http.size());
    CHECK(got.size() == 3);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(Json::parse(got[i]) == http[i]);

    auto human = porch_cli("events query", hub_env(hub));
    CHECK(lines(human.out).size() == 5);

    auto devices = porch_cli("--json admin devices", hub_env(hub));
    CHECK(devices.out.find(dev.device_id) != std::string::npos);
    CHECK(porch_cli("admin revoke " + dev.device_id, hub_env(hub)).exit_code == 0);
    DetectionEvent late;
    late.event_id = crypto::random_uuid();
    late.device_id = dev.device_id;
    late.detector_backend = "palette";
    client.upload(late, std::nullopt);
    CHECK(client.last_status() == 401);
}

TEST_CASE("subscribe and list through the CLI") {
    LiveHub hub;
    auto sub = porch_cli("--json notify subscribe --subscriber me --label person --min-confidence 0.4", hub_env(hub));
    REQUIRE(sub.exit_code == 0);
    std::string id = Json::parse(sub.out)["sub_id"];
    CHECK(porch_cli("notify unsubscribe " + id, hub_env(hub)).exit_code == 0);
    CHECK(porch_cli("notify unsubscribe " + id, hub_env(hub)).exit_code == 4);
    CHECK(porch_cli("notify respond nope --message hi", hub_env(hub)).exit_code == 4);
}

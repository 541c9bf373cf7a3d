#include "cli.hpp"

#include "porch/detectors/remote.hpp"
#include "porch/edge/agent.hpp"
#include "porch/hub/server.hpp"

#include <spdlog/spdlog.h>

#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <mutex>

namespace porch::cli {

namespace {

std::string env_or_empty(const char* name) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
}

Json stats_json(const edge::AgentStats& s) {
    return {
        {"captured", s.pipeline.captured},
        {"sampled", s.pipeline.sampled},
        {"events", s.pipeline.events},
        {"empty_frames", s.pipeline.empty_frames},
        {"no_backend", s.pipeline.no_backend},
        {"frames_dropped", s.frames_dropped},
        {"outbox_size", s.outbox_size},
        {"outbox_dropped", s.outbox_dropped},
        {"polls_ok", s.polls_ok},
        {"polls_failed", s.polls_failed},
        {"segments_posted", s.stream.posted},
        {"segments_skipped", s.stream.skipped},
        {"stream_sessions", s.stream.sessions},
    };
}

struct HubServeArgs {
    std::string config;
    std::optional<int> port;
    std::string listen;
    std::string data_dir;
    std::string dashboard;
};

int hub_serve(const HubServeArgs& a, const Output& out) {
    hub::HubConfig cfg;
    if (!a.config.empty()) cfg = hub::load_hub_config(a.config);
    if (a.port) cfg.port = *a.port;
    if (!a.listen.empty()) cfg.listen = a.listen;
    if (!a.data_dir.empty()) cfg.data_dir = a.data_dir;
    if (!a.dashboard.empty()) cfg.dashboard_dir = a.dashboard;
    if (cfg.admin_token.empty()) cfg.admin_token = env_or_empty("PORCH_ADMIN_TOKEN");
    if (cfg.user_token.empty()) cfg.user_token = env_or_empty("PORCH_USER_TOKEN");
    cfg.validate();

    hub::HubServer server(cfg);
    SignalWatcher watcher([&server] { server.stop(); });
    int port = server.start();
    if (out.json)
        out.line({{"status", "listening"}, {"url", server.url()}, {"port", port}});
    else
        out.text("hub listening on " + server.url());
    server.wait();
    spdlog::info("hub stopped");
    return kOk;
}

struct EdgeRunArgs {
    std::string config;
    std::string scene;
    std::string hub;
    std::optional<TimestampMs> interval_ms;
    std::optional<TimestampMs> run_for_ms;
    std::string outbox;
    bool virtual_time = false;
};

int edge_run(const EdgeRunArgs& a, const Output& out) {
    auto cfg = edge::load_edge_config(a.config);
    if (!a.scene.empty()) cfg.scene = a.scene;
    if (!a.hub.empty()) cfg.hub_url = a.hub;
    if (a.interval_ms) cfg.interval_ms = *a.interval_ms;
    if (a.run_for_ms) cfg.run_for_ms = *a.run_for_ms;
    if (!a.outbox.empty()) cfg.outbox = a.outbox;
    cfg.validate();

    edge::AgentOptions opts;
    opts.pacing = a.virtual_time ? edge::Pacing::Virtual : edge::Pacing::Realtime;
    edge::EdgeAgent agent(cfg, opts);
    SignalWatcher watcher([&agent] { agent.stop(); });
    if (out.json)
        out.line({{"status", "running"}, {"device_id", cfg.device_id}, {"hub_url", cfg.hub_url}});
    else
        out.text("edge agent " + cfg.device_id + " running against " + cfg.hub_url);
    agent.run();
    auto stats = stats_json(agent.stats());
    if (out.json)
        out.line({{"status", "stopped"}, {"stats", stats}});
    else
        out.text("edge agent stopped: " + stats.dump());
    return kOk;
}

struct DetectorServeArgs {
    std::string listen = "127.0.0.1";
    int port = 0;
    std::string palette;
};

int detector_serve(const DetectorServeArgs& a, const Output& out) {
    auto palette = detectors::Palette::defaults();
    if (!a.palette.empty()) {
        std::ifstream in(a.palette);
        if (!in) throw Error(ErrorCode::BadConfig, a.palette, "cannot open palette file");
        auto j = Json::parse(in, nullptr, false);
        if (j.is_discarded()) throw Error(ErrorCode::BadConfig, a.palette, "not JSON");
        palette = detectors::Palette::from_json(j);
    }
    detectors::DetectorServer server(std::make_shared<detectors::PaletteBackend>(palette));
    std::mutex m;
    std::condition_variable cv;
    bool stop = false;
    SignalWatcher watcher([&] {
        std::lock_guard lock(m);
        stop = true;
        cv.notify_all();
    });
    server.start(a.listen, a.port);
    if (out.json)
        out.line({{"status", "listening"}, {"endpoint", server.endpoint()}, {"port", server.port()}});
    else
        out.text("detector listening on " + server.endpoint());
    std::unique_lock lock(m);
    cv.wait(lock, [&] { return stop; });
    server.stop();
    return kOk;
}

}  // namespace

void register_role_commands(CLI::App& app, Output& out, int& exit_code) {
    auto* hub = app.add_subcommand("hub", "Hub role");
    hub->require_subcommand(1);
    auto hs = std::make_shared<HubServeArgs>();
    auto* serve = hub->add_subcommand("serve", "Run the hub HTTP service until SIGINT or SIGTERM");
    serve->add_option("--config", hs->config, "Hub TOML config")->check(CLI::ExistingFile);
    serve->add_option("--port", hs->port, "Listen port, 0 picks a free one");
    serve->add_option("--listen", hs->listen, "Listen address");
    serve->add_option("--data-dir", hs->data_dir, "Journal and blob directory");
    serve->add_option("--dashboard", hs->dashboard, "Serve static dashboard files from this directory")
        ->check(CLI::ExistingDirectory);
    serve->callback([hs, &out, &exit_code] { exit_code = hub_serve(*hs, out); });

    auto* edge = app.add_subcommand("edge", "Edge role");
    edge->require_subcommand(1);
    auto er = std::make_shared<EdgeRunArgs>();
    auto* run = edge->add_subcommand("run", "Run the edge agent");
    run->add_option("--config", er->config, "Edge TOML config")->required()->check(CLI::ExistingFile);
    run->add_option("--scene", er->scene, "Scene script JSON")->check(CLI::ExistingFile);
    run->add_option("--hub", er->hub, "Hub base URL");
    run->add_option("--interval-ms", er->interval_ms, "Sampling interval in milliseconds");
    run->add_option("--run-for-ms", er->run_for_ms, "Stop after this much capture time");
    run->add_option("--outbox", er->outbox, "Outbox file");
    run->add_flag("--virtual", er->virtual_time, "Render frames as fast as possible instead of in real time");
    run->callback([er, &out, &exit_code] { exit_code = edge_run(*er, out); });

    auto* det = app.add_subcommand("detector", "Remote detector service");
    det->require_subcommand(1);
    auto ds = std::make_shared<DetectorServeArgs>();
    auto* dserve = det->add_subcommand("serve", "Serve the palette detector over the detector wire protocol");
    dserve->add_option("--listen", ds->listen, "Listen address")->capture_default_str();
    dserve->add_option("--port", ds->port, "Listen port, 0 picks a free one")->capture_default_str();
    dserve->add_option("--palette", ds->palette, "Palette JSON; defaults to the built-in palette")->check(CLI::ExistingFile);
    dserve->callback([ds, &out, &exit_code] { exit_code = detector_serve(*ds, out); });
}

}  // namespace porch::cli

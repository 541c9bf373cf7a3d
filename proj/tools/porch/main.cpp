#include "cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <iostream>

int main(int argc, char** argv) {
    using namespace porch::cli;
    // stdout carries command output only.
    spdlog::set_default_logger(spdlog::stderr_color_mt("porch"));
    CLI::App app{"porch: edge video analytics agent and hub"};
    app.require_subcommand(1);
    // Subcommands inherit this, so group and global options may follow the leaf command.
    app.fallthrough();
    Output out;
    app.add_flag("--json", out.json, "Machine-readable output, one JSON object per line");
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
        ->capture_default_str()
        ->each([](const std::string& v) { spdlog::set_level(spdlog::level::from_str(v)); });
    int exit_code = kOk;
    register_role_commands(app, out, exit_code);
    register_client_commands(app, out, exit_code);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    } catch (const porch::Error& e) {
        return out.fail(kFailure, std::string(porch::to_string(e.code())), e.what());
    } catch (const std::exception& e) {
        return out.fail(kFailure, "Error", e.what());
    }
    return exit_code;
}

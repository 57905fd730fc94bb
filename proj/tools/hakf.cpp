// SPDX-License-Identifier: Apache-2.0
//
// hakf serve   --port N --data DIR
// hakf run     --scenario F [--seed N] --out F
// hakf compile --definition F [--palette F] [--mappings F]

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <iostream>

#include "hakf/headless.hpp"
#include "hakf/server.hpp"

namespace {

hakf::Gateway* g_gateway = nullptr;

void on_signal(int) {
  if (g_gateway != nullptr) g_gateway->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Human-agent knowledge fusion gateway"};
  app.require_subcommand(1);

  const char* env_data = std::getenv("HAKF_DATA_DIR");
  std::string data_dir = env_data != nullptr ? env_data : "data";

  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  int port = 8080;
  std::string host = "127.0.0.1";
  serve->add_option("--port", port, "Listen port (0 picks one)")->capture_default_str();
  serve->add_option("--host", host, "Listen address")->capture_default_str();
  serve->add_option("--data", data_dir, "Data directory (default $HAKF_DATA_DIR or ./data)");

  auto* run = app.add_subcommand("run", "Run a scenario headless and write detections as JSONL");
  std::string scenario;
  std::string out;
  std::uint64_t seed = 0;
  run->add_option("--scenario", scenario, "Scenario file (*.scenario.json)")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--out", out, "Detection JSONL output")->required();

  auto* compile = app.add_subcommand("compile", "Print the logic fragment for a definition");
  std::string definition;
  std::string palette;
  std::string mappings;
  compile->add_option("--definition", definition, "Definition JSON")->required();
  compile->add_option("--palette", palette, "Palette JSON for concept matchers");
  compile->add_option("--mappings", mappings, "Label-to-concept mapping JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (*run) {
    return hakf::run_headless(scenario, seed_opt->count() > 0 ? std::optional(seed) : std::nullopt, out,
                              std::cout, std::cerr);
  }
  if (*compile) {
    auto optional_path = [](const std::string& s) {
      return s.empty() ? std::nullopt : std::optional<std::filesystem::path>(s);
    };
    return hakf::compile_cli(definition, optional_path(palette), optional_path(mappings), std::cout, std::cerr);
  }

  try {
    hakf::ServerConfig config;
    config.host = host;
    config.port = port;
    config.data_dir = data_dir;
    hakf::Gateway gateway(config);
    const int bound = gateway.bind();
    g_gateway = &gateway;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "hakf: serving http://" << host << ":" << bound << " (data " << data_dir << ")\n";
    gateway.listen();
    g_gateway = nullptr;
    return 0;
  } catch (const hakf::Error& e) {
    std::cerr << to_string(e.code()) << ": " << e.what() << "\n";
    return e.code() == hakf::ErrorCode::io_error || e.code() == hakf::ErrorCode::port_in_use ? 2 : 1;
  }
}

// SPDX-License-Identifier: Apache-2.0
#pragma once

// HTTP + server-sent-events front end over the project services.

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "hakf/project.hpp"

namespace httplib {
class Server;
}

namespace hakf {

/// Status for an error code: 400 input, 404 unknown thing, 409 conflict,
/// 500 otherwise.
int http_status(ErrorCode code);
/// {"error": "<code>", "message": ..., "violations"?: [{field, rule}],
/// "line"?/"column"?/"expected"? for syntax errors}.
OrderedJson error_json(const Error& error);

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path data_dir = "data";
  /// Base for relative scenarioPath values.
  std::filesystem::path scenario_dir = std::filesystem::current_path();
};

class Gateway {
 public:
  /// Recovers and loads every project in the store.
  /// Errors: corrupt-store naming the file, io-error.
  explicit Gateway(ServerConfig config);
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  /// Returns the bound port. Errors: port-in-use.
  int bind();
  /// Serves until stop(); bind() first.
  void listen();
  /// bind() + listen() on a background thread; returns the port.
  int start();
  void stop();

  /// Loaded on first use. Errors: schema-violation (unsafe id), corrupt-store.
  Project& project(const std::string& id);
  const ProjectStore& store() const noexcept { return store_; }

 private:
  void routes();

  ServerConfig config_;
  ProjectStore store_;
  std::unique_ptr<httplib::Server> server_;
  std::mutex projects_mutex_;
  std::map<std::string, std::unique_ptr<Project>> projects_;
  std::thread listener_;
  int port_ = 0;
};

}  // namespace hakf

// SPDX-License-Identifier: Apache-2.0
#pragma once

// File-based project store. Documents are replaced atomically (temp file,
// fsync, rename, fsync directory); logs are append-only JSONL. A crash can
// leave at most a stray temp file or a torn final log line, both of which
// recover() removes.
//
// Layout under <root>/projects/<project>/:
//   palette.json graph.json definitions.json markings.json mappings.json
//   detections.jsonl
//   runs/<n>.config.json runs/<n>.events.jsonl runs/<n>.detections.jsonl

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hakf/util.hpp"

namespace hakf {

namespace fs = std::filesystem;

/// Called at named points inside writes; tests use it to simulate a crash.
using FaultHook = std::function<void(std::string_view point)>;

/// Errors: io-error.
void atomic_write(const fs::path& path, std::string_view bytes, const FaultHook& hook = {});
/// Appends `line` plus a newline and fsyncs. Errors: io-error.
void append_line(const fs::path& path, std::string_view line, const FaultHook& hook = {});
/// nullopt when the file does not exist. Errors: io-error.
std::optional<std::string> read_file(const fs::path& path);

/// Every complete line parsed as JSON. A final line that lacks its newline
/// or does not parse is treated as torn: dropped, and truncated from disk
/// when `repair`. Any earlier bad line is corrupt-store naming the file.
std::vector<Json> read_jsonl(const fs::path& path, bool repair);

/// Letters, digits, '_' and '-'; keeps ids safe as path components.
bool is_safe_id(std::string_view id);

class ProjectStore {
 public:
  explicit ProjectStore(fs::path root, FaultHook hook = {});

  const fs::path& root() const noexcept { return root_; }
  /// Errors: schema-violation for an unsafe project id.
  fs::path project_dir(std::string_view project) const;
  std::vector<std::string> projects() const;

  /// Deletes temp files, truncates torn log tails and checks that every
  /// document parses. Errors: corrupt-store naming the file.
  void recover(std::string_view project) const;

  std::optional<std::string> read_document(std::string_view project, std::string_view name) const;
  void write_document(std::string_view project, std::string_view name, std::string_view bytes) const;
  void append_log(std::string_view project, std::string_view name, std::string_view line) const;
  std::vector<Json> read_log(std::string_view project, std::string_view name) const;

  /// 1 + the largest run number present.
  int next_run_number(std::string_view project) const;
  fs::path run_file(std::string_view project, int run, std::string_view suffix) const;

 private:
  fs::path root_;
  FaultHook hook_;
};

}  // namespace hakf

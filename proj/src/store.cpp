// SPDX-License-Identifier: Apache-2.0
#include "hakf/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hakf/error.hpp"

namespace hakf {

namespace {

constexpr std::string_view kTempSuffix = ".tmp";

[[noreturn]] void io_fail(const std::string& what, const fs::path& path) {
  throw Error(ErrorCode::io_error, what + " " + path.string() + ": " + std::strerror(errno));
}

void write_all(int fd, const char* data, std::size_t size, const fs::path& path) {
  while (size > 0) {
    ssize_t n = ::write(fd, data, size);
    if (n < 0) {
      if (errno == EINTR) continue;
      io_fail("cannot write", path);
    }
    data += n;
    size -= static_cast<std::size_t>(n);
  }
}

void fsync_dir(const fs::path& dir) {
  int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

void fire(const FaultHook& hook, std::string_view point) {
  if (hook) hook(point);
}

}  // namespace

void atomic_write(const fs::path& path, std::string_view bytes, const FaultHook& hook) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  const fs::path temp = path.string() + std::string(kTempSuffix);
  int fd = ::open(temp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) io_fail("cannot create", temp);
  try {
    const std::size_t half = bytes.size() / 2;
    write_all(fd, bytes.data(), half, temp);
    fire(hook, "write:partial");
    write_all(fd, bytes.data() + half, bytes.size() - half, temp);
    if (::fsync(fd) != 0) io_fail("cannot fsync", temp);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  fire(hook, "write:before-rename");
  if (::rename(temp.c_str(), path.c_str()) != 0) io_fail("cannot rename onto", path);
  fsync_dir(path.parent_path());
  fire(hook, "write:done");
}

void append_line(const fs::path& path, std::string_view line, const FaultHook& hook) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) io_fail("cannot open", path);
  try {
    std::string buffer(line);
    buffer += '\n';
    const std::size_t half = buffer.size() / 2;
    write_all(fd, buffer.data(), half, path);
    fire(hook, "append:partial");
    write_all(fd, buffer.data() + half, buffer.size() - half, path);
    if (::fsync(fd) != 0) io_fail("cannot fsync", path);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  fire(hook, "append:done");
}

std::optional<std::string> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (!fs::exists(path)) return std::nullopt;
    io_fail("cannot read", path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<Json> read_jsonl(const fs::path& path, bool repair) {
  auto text = read_file(path);
  std::vector<Json> out;
  if (!text) return out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text->size()) {
    ++line_no;
    const std::size_t nl = text->find('\n', pos);
    const bool complete = nl != std::string::npos;
    std::string_view line(text->data() + pos, (complete ? nl : text->size()) - pos);
    const bool last = !complete || nl + 1 == text->size();
    try {
      if (!complete) throw Error(ErrorCode::parse_error, "missing newline");
      out.push_back(parse_json(line));
    } catch (const Error&) {
      if (!last) {
        throw Error(ErrorCode::corrupt_store,
                    "corrupt log " + path.string() + " at line " + std::to_string(line_no));
      }
      if (repair) {
        std::error_code ec;
        fs::resize_file(path, pos, ec);
        if (ec) throw Error(ErrorCode::io_error, "cannot truncate " + path.string() + ": " + ec.message());
      }
      break;
    }
    pos = nl + 1;
  }
  return out;
}

bool is_safe_id(std::string_view id) {
  if (id.empty() || id.size() > 128) return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

ProjectStore::ProjectStore(fs::path root, FaultHook hook) : root_(std::move(root)), hook_(std::move(hook)) {
  std::error_code ec;
  fs::create_directories(root_ / "projects", ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create " + (root_ / "projects").string() + ": " + ec.message());
}

fs::path ProjectStore::project_dir(std::string_view project) const {
  if (!is_safe_id(project)) {
    throw Error(ErrorCode::schema_violation, "project id \"" + std::string(project) + "\" is not a safe identifier");
  }
  return root_ / "projects" / std::string(project);
}

std::vector<std::string> ProjectStore::projects() const {
  std::vector<std::string> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(root_ / "projects", ec)) {
    if (entry.is_directory() && is_safe_id(entry.path().filename().string())) {
      out.push_back(entry.path().filename().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void ProjectStore::recover(std::string_view project) const {
  const fs::path dir = project_dir(project);
  std::error_code ec;
  if (!fs::exists(dir, ec)) return;
  for (const auto& entry : fs::recursive_directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    const fs::path& p = entry.path();
    const std::string name = p.filename().string();
    if (name.size() >= kTempSuffix.size() &&
        name.compare(name.size() - kTempSuffix.size(), kTempSuffix.size(), kTempSuffix) == 0) {
      fs::remove(p, ec);
    }
  }
  for (const auto& entry : fs::recursive_directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    const fs::path& p = entry.path();
    if (p.extension() == ".jsonl") {
      read_jsonl(p, true);
    } else if (p.extension() == ".json") {
      auto text = read_file(p);
      try {
        parse_json(*text);
      } catch (const Error&) {
        throw Error(ErrorCode::corrupt_store, "corrupt document " + p.string());
      }
    }
  }
}

std::optional<std::string> ProjectStore::read_document(std::string_view project, std::string_view name) const {
  return read_file(project_dir(project) / std::string(name));
}

void ProjectStore::write_document(std::string_view project, std::string_view name, std::string_view bytes) const {
  atomic_write(project_dir(project) / std::string(name), bytes, hook_);
}

void ProjectStore::append_log(std::string_view project, std::string_view name, std::string_view line) const {
  append_line(project_dir(project) / std::string(name), line, hook_);
}

std::vector<Json> ProjectStore::read_log(std::string_view project, std::string_view name) const {
  return read_jsonl(project_dir(project) / std::string(name), false);
}

int ProjectStore::next_run_number(std::string_view project) const {
  int highest = 0;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(project_dir(project) / "runs", ec)) {
    const std::string name = entry.path().filename().string();
    const auto dot = name.find('.');
    if (dot == std::string::npos || dot == 0) continue;
    try {
      std::size_t used = 0;
      int n = std::stoi(name.substr(0, dot), &used);
      if (used == dot) highest = std::max(highest, n);
    } catch (const std::exception&) {
    }
  }
  return highest + 1;
}

fs::path ProjectStore::run_file(std::string_view project, int run, std::string_view suffix) const {
  return project_dir(project) / "runs" / (std::to_string(run) + std::string(suffix));
}

}  // namespace hakf

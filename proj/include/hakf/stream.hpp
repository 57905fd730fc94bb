// SPDX-License-Identifier: Apache-2.0
#pragma once

// Server-push fan-out. Publishing never blocks: each subscriber has a
// bounded queue, and a subscriber whose queue is full is dropped after one
// terminal "dropped" message.

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hakf/util.hpp"

namespace hakf {

enum class StreamKind { simple_event, frequency_update, detection, marking_changed, definition_changed };
std::string_view to_string(StreamKind kind);

struct StreamMessage {
  std::uint64_t sequence = 0;
  std::string kind;  // a StreamKind name, or "dropped" as the terminal message
  OrderedJson payload;
};

/// "id: <seq>\nevent: <kind>\ndata: <json>\n\n"
std::string format_sse(const StreamMessage& message);

class Subscription {
 public:
  explicit Subscription(std::size_t capacity) : capacity_(capacity) {}

  /// Waits up to `timeout_ms`; nullopt on timeout or once closed and drained.
  std::optional<StreamMessage> next(int timeout_ms);
  bool closed() const;
  void close();

 private:
  friend class StreamHub;
  /// False when the queue was full; the subscription is then closed with
  /// a terminal message.
  bool offer(const StreamMessage& message);

  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<StreamMessage> queue_;
  std::size_t capacity_;
  bool closed_ = false;
};

class StreamHub {
 public:
  explicit StreamHub(std::size_t per_client_capacity = 4096) : capacity_(per_client_capacity) {}

  std::shared_ptr<Subscription> subscribe();
  void publish(StreamKind kind, OrderedJson payload);
  std::uint64_t last_sequence() const;
  std::size_t subscriber_count() const;
  /// Closes every subscription (server shutdown).
  void close_all();

 private:
  mutable std::mutex mutex_;
  std::vector<std::shared_ptr<Subscription>> subscribers_;
  std::uint64_t sequence_ = 0;
  std::size_t capacity_;
};

}  // namespace hakf

// SPDX-License-Identifier: Apache-2.0
#include "hakf/stream.hpp"

#include <algorithm>
#include <chrono>

namespace hakf {

std::string_view to_string(StreamKind kind) {
  switch (kind) {
    case StreamKind::simple_event: return "simple_event";
    case StreamKind::frequency_update: return "frequency_update";
    case StreamKind::detection: return "detection";
    case StreamKind::marking_changed: return "marking_changed";
    case StreamKind::definition_changed: return "definition_changed";
  }
  return "simple_event";
}

std::string format_sse(const StreamMessage& message) {
  return "id: " + std::to_string(message.sequence) + "\nevent: " + message.kind +
         "\ndata: " + message.payload.dump() + "\n\n";
}

std::optional<StreamMessage> Subscription::next(int timeout_ms) {
  std::unique_lock lock(mutex_);
  ready_.wait_for(lock, std::chrono::milliseconds(timeout_ms),
                  [&] { return !queue_.empty() || closed_; });
  if (queue_.empty()) return std::nullopt;
  StreamMessage m = std::move(queue_.front());
  queue_.pop_front();
  return m;
}

bool Subscription::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

void Subscription::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  ready_.notify_all();
}

bool Subscription::offer(const StreamMessage& message) {
  {
    std::lock_guard lock(mutex_);
    if (closed_) return false;
    if (queue_.size() >= capacity_) {
      queue_.push_back({message.sequence, "dropped",
                        OrderedJson{{"reason", "client too slow"}, {"lastSequence", message.sequence - 1}}});
      closed_ = true;
    } else {
      queue_.push_back(message);
    }
  }
  ready_.notify_all();
  return !closed();
}

std::shared_ptr<Subscription> StreamHub::subscribe() {
  auto sub = std::make_shared<Subscription>(capacity_);
  std::lock_guard lock(mutex_);
  subscribers_.push_back(sub);
  return sub;
}

void StreamHub::publish(StreamKind kind, OrderedJson payload) {
  std::lock_guard lock(mutex_);
  StreamMessage message{++sequence_, std::string(to_string(kind)), std::move(payload)};
  subscribers_.erase(std::remove_if(subscribers_.begin(), subscribers_.end(),
                                    [&](const std::shared_ptr<Subscription>& s) { return !s->offer(message); }),
                     subscribers_.end());
}

std::uint64_t StreamHub::last_sequence() const {
  std::lock_guard lock(mutex_);
  return sequence_;
}

std::size_t StreamHub::subscriber_count() const {
  std::lock_guard lock(mutex_);
  return subscribers_.size();
}

void StreamHub::close_all() {
  std::lock_guard lock(mutex_);
  for (auto& s : subscribers_) s->close();
  subscribers_.clear();
}

}  // namespace hakf

// SPDX-License-Identifier: Apache-2.0
#include "hakf/server.hpp"

#include <httplib.h>

#include <iostream>

namespace hakf {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::schema_violation:
    case ErrorCode::parse_error:
    case ErrorCode::syntax_error:
    case ErrorCode::invalid_definition:
    case ErrorCode::invalid_scenario:
    case ErrorCode::too_many_facts:
    case ErrorCode::log_too_large:
    case ErrorCode::out_of_order_timestamp:
    case ErrorCode::version_mismatch:
      return 400;
    case ErrorCode::unknown_concept:
    case ErrorCode::unknown_feed:
    case ErrorCode::unknown_event:
    case ErrorCode::unknown_definition:
    case ErrorCode::unknown_detection:
    case ErrorCode::no_such_marking:
      return 404;
    case ErrorCode::duplicate_id:
    case ErrorCode::dangling_endpoint:
    case ErrorCode::palette_conflict:
    case ErrorCode::dangling_constituent:
    case ErrorCode::busy:
      return 409;
    case ErrorCode::io_error:
    case ErrorCode::corrupt_store:
    case ErrorCode::port_in_use:
    case ErrorCode::internal:
      return 500;
  }
  return 500;
}

OrderedJson error_json(const Error& error) {
  OrderedJson j;
  j["error"] = std::string(to_string(error.code()));
  j["message"] = error.what();
  if (const auto* v = dynamic_cast<const ValidationError*>(&error)) {
    OrderedJson list = OrderedJson::array();
    for (const auto& violation : v->violations()) {
      list.push_back({{"field", violation.field}, {"rule", violation.rule}});
    }
    j["violations"] = std::move(list);
  }
  if (const auto* s = dynamic_cast<const SyntaxError*>(&error)) {
    j["line"] = s->line();
    j["column"] = s->column();
    j["expected"] = s->expected();
  }
  return j;
}

namespace {

void send(httplib::Response& res, int status, const OrderedJson& body) {
  res.status = status;
  res.set_content(body.dump() + "\n", "application/json");
}

using Handler = std::function<OrderedJson(const httplib::Request&, httplib::Response&)>;

// Wraps a handler so library errors become JSON error responses.
httplib::Server::Handler json_route(Handler handler, int ok_status = 200) {
  return [handler = std::move(handler), ok_status](const httplib::Request& req, httplib::Response& res) {
    try {
      OrderedJson body = handler(req, res);
      send(res, ok_status, body);
    } catch (const Error& e) {
      send(res, http_status(e.code()), error_json(e));
    } catch (const std::exception& e) {
      send(res, 500, OrderedJson{{"error", "internal"}, {"message", e.what()}});
    }
  };
}

Json body_json(const httplib::Request& req) { return parse_json(req.body); }

std::optional<int> run_param(const httplib::Request& req) {
  if (!req.has_param("run")) return std::nullopt;
  try {
    return std::stoi(req.get_param_value("run"));
  } catch (const std::exception&) {
    throw Error(ErrorCode::schema_violation, "run: expected an integer");
  }
}

double number_param(const httplib::Request& req, const char* name, double fallback) {
  if (!req.has_param(name)) return fallback;
  const std::string text = req.get_param_value(name);
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::schema_violation, std::string(name) + ": expected a number, got \"" + text + "\"");
  }
}

}  // namespace

Gateway::Gateway(ServerConfig config)
    : config_(std::move(config)), store_(config_.data_dir), server_(std::make_unique<httplib::Server>()) {
  // The library default adds SO_REUSEPORT, which would let a second gateway
  // share a port that is already serving.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
  });
  for (const auto& id : store_.projects()) project(id);
  routes();
}

Gateway::~Gateway() { stop(); }

Project& Gateway::project(const std::string& id) {
  std::lock_guard lock(projects_mutex_);
  auto it = projects_.find(id);
  if (it == projects_.end()) it = projects_.emplace(id, std::make_unique<Project>(store_, id)).first;
  return *it->second;
}

void Gateway::routes() {
  auto& s = *server_;
  const std::string p = R"(/api/projects/([A-Za-z0-9_-]+))";

  s.Get("/api/health", json_route([](const auto&, auto&) { return OrderedJson{{"status", "ok"}}; }));
  s.Get("/api/projects", json_route([this](const auto&, auto&) { return OrderedJson(store_.projects()); }));

  s.Get(p + "/graph", json_route([this](const auto& req, auto&) { return project(req.matches[1]).graph_json(); }));
  s.Put(p + "/graph", json_route([this](const auto& req, auto&) {
          return project(req.matches[1]).put_graph(body_json(req));
        }));
  s.Get(p + "/palette",
        json_route([this](const auto& req, auto&) { return project(req.matches[1]).palette_json(); }));
  s.Post(p + "/palette/concepts", json_route([this](const auto& req, auto&) {
           return project(req.matches[1]).add_concept(body_json(req));
         }, 201));
  s.Get(p + "/mappings",
        json_route([this](const auto& req, auto&) { return project(req.matches[1]).mappings_json(); }));
  s.Put(p + "/mappings", json_route([this](const auto& req, auto&) {
          return project(req.matches[1]).put_mappings(body_json(req));
        }));
  s.Get(p + "/definitions",
        json_route([this](const auto& req, auto&) { return project(req.matches[1]).definitions_json(); }));
  s.Post(p + "/definitions", json_route([this](const auto& req, auto&) {
           return project(req.matches[1]).add_definition(body_json(req));
         }, 201));
  s.Get(p + "/markings",
        json_route([this](const auto& req, auto&) { return project(req.matches[1]).markings_json(); }));
  s.Post(p + R"(/feeds/([A-Za-z0-9_-]+)/regular)", json_route([this](const auto& req, auto&) {
           return project(req.matches[1]).mark_regular(req.matches[2], body_json(req));
         }, 201));
  s.Delete(p + R"(/feeds/([A-Za-z0-9_-]+)/regular)", json_route([this](const auto& req, auto&) {
             std::string label = req.get_param_value("classLabel");
             std::string context = req.has_param("context") ? req.get_param_value("context") : "any";
             if (label.empty() && !req.body.empty()) {
               Json body = body_json(req);
               label = json_field::string(body, "classLabel", "marking");
               if (body.contains("context")) context = json_field::string(body, "context", "marking");
             }
             if (label.empty()) throw Error(ErrorCode::schema_violation, "marking.classLabel: required");
             return project(req.matches[1]).unmark_regular(req.matches[2], label, context_from_string(context));
           }));
  s.Get(p + R"(/feeds/([A-Za-z0-9_-]+)/frequencies)", json_route([this](const auto& req, auto&) {
          const double window = number_param(req, "window", 60.0);
          const Context context =
              req.has_param("context") ? context_from_string(req.get_param_value("context")) : Context::any;
          return project(req.matches[1]).frequencies(req.matches[2], window, context);
        }));
  s.Get(p + "/detections", json_route([this](const auto& req, auto&) {
          const double since = number_param(req, "since", 0.0);
          if (since < 0) throw Error(ErrorCode::schema_violation, "since: must be non-negative");
          return project(req.matches[1]).detections_since(static_cast<std::uint64_t>(since));
        }));
  s.Get(p + R"(/detections/([^/]+)/explanation)", json_route([this](const auto& req, auto&) {
          return project(req.matches[1]).explanation(req.matches[2], run_param(req));
        }));
  s.Get(p + R"(/events/([^/]+)/suppression)", json_route([this](const auto& req, auto&) {
          return project(req.matches[1]).suppression(req.matches[2], run_param(req));
        }));
  s.Post(p + "/scenario/run", json_route([this](const auto& req, auto& res) {
           OrderedJson out = project(req.matches[1]).run_scenario(body_json(req), config_.scenario_dir);
           if (out.value("status", "") == "started") res.status = 202;
           return out;
         }));

  s.Get(p + "/stream", [this](const httplib::Request& req, httplib::Response& res) {
    std::shared_ptr<Subscription> sub;
    try {
      sub = project(req.matches[1]).hub().subscribe();
    } catch (const Error& e) {
      send(res, http_status(e.code()), error_json(e));
      return;
    }
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream",
        [sub](std::size_t, httplib::DataSink& sink) {
          auto message = sub->next(500);
          if (!message) {
            if (sub->closed()) {
              sink.done();
              return true;
            }
            const std::string keepalive = ": keepalive\n\n";
            return sink.write(keepalive.data(), keepalive.size());
          }
          const std::string frame = format_sse(*message);
          if (!sink.write(frame.data(), frame.size())) return false;
          if (message->kind == "dropped") sink.done();
          return true;
        },
        [sub](bool) { sub->close(); });
  });
}

int Gateway::bind() {
  if (config_.port == 0) {
    port_ = server_->bind_to_any_port(config_.host);
    if (port_ < 0) throw Error(ErrorCode::port_in_use, "cannot bind " + config_.host);
  } else {
    if (!server_->bind_to_port(config_.host, config_.port)) {
      throw Error(ErrorCode::port_in_use, "port " + std::to_string(config_.port) + " on " + config_.host +
                                              " is in use or not bindable");
    }
    port_ = config_.port;
  }
  return port_;
}

void Gateway::listen() { server_->listen_after_bind(); }

int Gateway::start() {
  const int port = bind();
  listener_ = std::thread([this] { listen(); });
  server_->wait_until_ready();
  return port;
}

void Gateway::stop() {
  {
    std::lock_guard lock(projects_mutex_);
    for (auto& [id, project] : projects_) project->hub().close_all();
  }
  if (server_) server_->stop();
  if (listener_.joinable()) listener_.join();
}

}  // namespace hakf

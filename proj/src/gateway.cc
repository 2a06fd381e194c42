#include "llmguard/gateway.h"

#include <chrono>
#include <cstdio>
#include <random>

#include <httplib.h>

#include "llmguard/errors.h"
#include "llmguard/wire.h"

namespace llmguard {

namespace {

HttpReply json_reply(const Json& body, int status = 200) {
  return HttpReply{status, body.dump(), "application/json"};
}

// Parses a JSON object body and rejects keys outside `allowed`.
Json parse_body(std::string_view body, std::initializer_list<std::string_view> allowed) {
  Json doc;
  try {
    doc = Json::parse(body);
  } catch (const Json::parse_error& e) {
    throw UsageError(std::string("body is not valid JSON: ") + e.what());
  }
  try {
    require_known_keys(doc, allowed, "request");
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  return doc;
}

std::string required_string(const Json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_string()) {
    throw UsageError(std::string("request needs a string '") + key + "'");
  }
  return doc[key].get<std::string>();
}

class UnknownDetectorError : public UsageError {
 public:
  using UsageError::UsageError;
};

class OverridesDisabledError : public UsageError {
 public:
  using UsageError::UsageError;
};

// Maps the request-level exceptions onto HTTP status codes.
template <typename Handler>
HttpReply guarded(Handler&& handler) {
  try {
    return handler();
  } catch (const UnknownDetectorError& e) {
    return error_reply(400, "unknown_detector", e.what());
  } catch (const OverridesDisabledError& e) {
    return error_reply(403, "overrides_disabled", e.what());
  } catch (const UsageError& e) {
    return error_reply(400, "malformed_body", e.what());
  } catch (const UpstreamError& e) {
    return error_reply(502, "upstream_error", e.what());
  } catch (const std::exception& e) {
    return error_reply(500, "internal_error", e.what());
  }
}

}  // namespace

HttpReply error_reply(int status, std::string_view code, std::string_view message) {
  return json_reply({{"error", {{"code", code}, {"message", message}}}}, status);
}

GatewayService::GatewayService(std::shared_ptr<const DetectorRegistry> registry, Policy policy,
                               std::shared_ptr<const Upstream> upstream, GatewayOptions options)
    : registry_(std::move(registry)),
      policy_(std::move(policy)),
      upstream_(std::move(upstream)),
      options_(options) {
  for (const auto& entry : policy_.detectors()) {
    if (registry_->find(entry.detector_id) == nullptr) {
      throw ConfigError("policy names detector '" + entry.detector_id +
                        "' which is not in the manifest");
    }
  }
  std::random_device device;
  char prefix[16];
  std::snprintf(prefix, sizeof prefix, "%08x", device());
  id_prefix_ = prefix;
}

std::string GatewayService::next_request_id() const {
  const std::uint64_t n = request_counter_.fetch_add(1) + 1;
  return "req-" + id_prefix_ + "-" + std::to_string(n);
}

Policy GatewayService::apply_overrides(const Json& toggles) const {
  if (!toggles.is_object()) throw UsageError("'detectors' must be an object");
  if (!toggles.empty() && !options_.allow_overrides) {
    throw OverridesDisabledError("per-request detector overrides are disabled");
  }
  std::vector<DetectorPolicy> entries = policy_.detectors();
  for (const auto& [id, value] : toggles.items()) {
    auto it = std::find_if(entries.begin(), entries.end(),
                           [&](const DetectorPolicy& e) { return e.detector_id == id; });
    if (registry_->find(id) == nullptr || it == entries.end()) {
      throw UnknownDetectorError("unknown detector '" + id + "'");
    }
    if (value.is_boolean()) {
      it->enabled = value.get<bool>();
    } else if (value.is_object()) {
      for (const auto& [key, field] : value.items()) {
        if (key == "enabled" && field.is_boolean()) {
          it->enabled = field.get<bool>();
        } else if (key == "threshold" && field.is_number()) {
          it->threshold = field.get<double>();
        } else {
          throw UsageError("detector override '" + id + "': bad field '" + key + "'");
        }
      }
    } else {
      throw UsageError("detector override '" + id + "' must be a boolean or an object");
    }
  }
  try {
    return Policy(std::move(entries), policy_.block_message(), policy_.short_circuit());
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
}

HttpReply GatewayService::guarded_chat(std::string_view body) const {
  return guarded([&] {
    const Json doc = parse_body(body, {"prompt", "detectors"});
    Exchange exchange{next_request_id(), required_string(doc, "prompt"), std::nullopt};
    const Policy effective =
        doc.contains("detectors") ? apply_overrides(doc["detectors"]) : policy_;
    const Verdict verdict = guard_exchange(*registry_, effective, exchange, *upstream_);
    return json_reply(verdict_to_json(verdict, exchange.request_id));
  });
}

HttpReply GatewayService::unguarded_chat(std::string_view body) const {
  if (!options_.enable_unguarded) {
    return error_reply(403, "unguarded_disabled", "the unguarded endpoint is disabled");
  }
  return guarded([&] {
    const Json doc = parse_body(body, {"prompt"});
    const std::string prompt = required_string(doc, "prompt");
    std::string response;
    try {
      response = upstream_->complete(prompt);
    } catch (const UpstreamError&) {
      throw;
    } catch (const std::exception& e) {
      throw UpstreamError(e.what());
    }
    return json_reply({{"response", response}});
  });
}

HttpReply GatewayService::scan(std::string_view body) const {
  return guarded([&] {
    const Json doc = parse_body(body, {"text", "phase", "detectors"});
    const std::string text = required_string(doc, "text");
    Phase phase;
    try {
      phase = parse_phase(required_string(doc, "phase"));
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    }
    const Policy effective =
        doc.contains("detectors") ? apply_overrides(doc["detectors"]) : policy_;
    const auto reports = guard_text(*registry_, effective, text, phase);
    return json_reply({{"reports", reports_to_json(reports)}});
  });
}

HttpReply GatewayService::policy() const { return json_reply(policy_to_json(policy_)); }

HttpReply GatewayService::health() const { return HttpReply{200, "ok", "text/plain"}; }

GatewayServer::GatewayServer(std::shared_ptr<const GatewayService> service)
    : service_(std::move(service)), server_(std::make_unique<httplib::Server>()) {
  const std::size_t limit = service_->options().max_body_bytes;
  server_->set_payload_max_length(limit);
  // httplib's default adds SO_REUSEPORT, which would let a second gateway
  // silently share a port that is already in use.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof yes);
  });

  auto send = [](httplib::Response& res, const HttpReply& reply) {
    res.status = reply.status;
    res.set_content(reply.body, reply.content_type);
  };
  auto post = [this, send, limit](const char* path, HttpReply (GatewayService::*handler)(
                                                        std::string_view) const) {
    server_->Post(path, [this, send, limit, handler](const httplib::Request& req,
                                                     httplib::Response& res) {
      if (req.body.size() > limit) {
        send(res, error_reply(413, "body_too_large", "request body exceeds the size limit"));
        return;
      }
      send(res, ((*service_).*handler)(req.body));
    });
  };
  post("/v1/guarded-chat", &GatewayService::guarded_chat);
  post("/v1/unguarded-chat", &GatewayService::unguarded_chat);
  post("/v1/scan", &GatewayService::scan);
  server_->Get("/v1/policy", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, service_->policy());
  });
  server_->Get("/healthz", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, service_->health());
  });
  server_->set_error_handler([send](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    switch (res.status) {
      case 413:
        send(res, error_reply(413, "body_too_large", "request body exceeds the size limit"));
        break;
      case 404:
        send(res, error_reply(404, "not_found", "no such endpoint"));
        break;
      default:
        send(res, error_reply(res.status, "http_error", "request failed"));
        break;
    }
  });
}

GatewayServer::~GatewayServer() { stop(); }

int GatewayServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw Error("cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) {
    throw Error("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void GatewayServer::listen() { server_->listen_after_bind(); }

void GatewayServer::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

void GatewayServer::wait_until_ready() const {
  while (!server_->is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(1));
}

}  // namespace llmguard

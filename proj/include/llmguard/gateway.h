#pragma once

// HTTP gateway. GatewayService holds the request handlers as plain
// functions of the request body; GatewayServer binds them to cpp-httplib.
//
//   POST /v1/guarded-chat   {"prompt", "detectors"?}  -> verdict
//   POST /v1/unguarded-chat {"prompt"}                -> {"response"}
//   POST /v1/scan           {"text", "phase", "detectors"?} -> {"reports"}
//   GET  /v1/policy                                   -> effective policy
//   GET  /healthz                                     -> "ok"
//
// "detectors" maps a registered detector id to a boolean or to
// {"enabled"?, "threshold"?}. Errors are {"error": {"code", "message"}}.
// Full schema: docs/http-api.md.

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "llmguard/config.h"
#include "llmguard/core.h"
#include "llmguard/detectors.h"
#include "llmguard/ensemble.h"

namespace httplib {
class Server;
}

namespace llmguard {

inline constexpr std::size_t kDefaultMaxBodyBytes = 64 * 1024;

struct GatewayOptions {
  std::size_t max_body_bytes = kDefaultMaxBodyBytes;
  bool allow_overrides = true;
  bool enable_unguarded = true;
};

struct HttpReply {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

HttpReply error_reply(int status, std::string_view code, std::string_view message);

class GatewayService {
 public:
  // Throws ConfigError if the policy enables a detector the registry lacks.
  GatewayService(std::shared_ptr<const DetectorRegistry> registry, Policy policy,
                 std::shared_ptr<const Upstream> upstream, GatewayOptions options = {});

  HttpReply guarded_chat(std::string_view body) const;
  HttpReply unguarded_chat(std::string_view body) const;
  HttpReply scan(std::string_view body) const;
  HttpReply policy() const;
  HttpReply health() const;

  // Merges per-request toggles over the base policy. Only registry
  // detectors may be named; throws UsageError otherwise.
  Policy apply_overrides(const Json& toggles) const;

  const Policy& base_policy() const { return policy_; }
  const GatewayOptions& options() const { return options_; }

 private:
  std::string next_request_id() const;

  std::shared_ptr<const DetectorRegistry> registry_;
  Policy policy_;
  std::shared_ptr<const Upstream> upstream_;
  GatewayOptions options_;
  std::string id_prefix_;
  mutable std::atomic<std::uint64_t> request_counter_{0};
};

class GatewayServer {
 public:
  explicit GatewayServer(std::shared_ptr<const GatewayService> service);
  ~GatewayServer();
  GatewayServer(const GatewayServer&) = delete;
  GatewayServer& operator=(const GatewayServer&) = delete;

  // Binds host:port; port 0 picks a free port. Returns the bound port.
  // Throws Error when the address cannot be bound.
  int bind(const std::string& host, int port);
  // Serves until stop() is called.
  void listen();
  void stop();
  // Blocks until the listener thread is accepting connections.
  void wait_until_ready() const;

 private:
  std::shared_ptr<const GatewayService> service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace llmguard

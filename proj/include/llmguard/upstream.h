#pragma once

// Upstream LLM clients: an echo mock, a canned fixture table, and a generic
// chat-completions HTTP adapter.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "llmguard/ensemble.h"

namespace llmguard {

enum class UpstreamKind { kEcho, kCanned, kHttpChat };

std::string_view upstream_kind_name(UpstreamKind kind);
UpstreamKind parse_upstream_kind(std::string_view name);

struct HttpChatSettings {
  std::string base_url;  // e.g. http://127.0.0.1:8000/v1
  std::string model;
  std::string token_env;  // environment variable holding a bearer token
  int timeout_ms = 30000;
};

struct UpstreamConfig {
  UpstreamKind kind = UpstreamKind::kEcho;
  std::string fixture_path;  // Canned only
  HttpChatSettings http;     // HttpChat only

  // Throws ConfigError when the populated fields do not match the kind.
  void validate() const;
};

class EchoUpstream : public Upstream {
 public:
  std::string complete(std::string_view prompt) const override { return std::string(prompt); }
};

// Exact-prompt lookup. The fixture file is a JSON object of prompt ->
// response strings; the key "*" holds the fallback entry.
class CannedUpstream : public Upstream {
 public:
  using Entries = std::map<std::string, std::string, std::less<>>;

  explicit CannedUpstream(Entries entries,
                          std::optional<std::string> fallback = std::nullopt);
  static CannedUpstream from_file(const std::string& path);

  std::string complete(std::string_view prompt) const override;

 private:
  Entries entries_;
  std::optional<std::string> fallback_;
};

// POSTs {"model", "messages": [{"role": "user", "content": prompt}]} to
// {base_url}/chat/completions and returns choices[0].message.content.
// Plain http only.
class HttpChatUpstream : public Upstream {
 public:
  explicit HttpChatUpstream(HttpChatSettings settings);
  std::string complete(std::string_view prompt) const override;

 private:
  HttpChatSettings settings_;
  std::string scheme_host_port_;
  std::string path_;
};

std::unique_ptr<Upstream> make_upstream(const UpstreamConfig& config);

// One-shot call through a freshly built client.
std::string upstream_call(const UpstreamConfig& config, std::string_view prompt);

}  // namespace llmguard

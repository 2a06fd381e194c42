#include "llmguard/upstream.h"

#include <cstdlib>

#include <httplib.h>

#include "llmguard/config.h"
#include "llmguard/errors.h"

namespace llmguard {

std::string_view upstream_kind_name(UpstreamKind kind) {
  switch (kind) {
    case UpstreamKind::kEcho:
      return "echo";
    case UpstreamKind::kCanned:
      return "canned";
    case UpstreamKind::kHttpChat:
      return "http";
  }
  return "echo";
}

UpstreamKind parse_upstream_kind(std::string_view name) {
  if (name == "echo") return UpstreamKind::kEcho;
  if (name == "canned") return UpstreamKind::kCanned;
  if (name == "http") return UpstreamKind::kHttpChat;
  throw ConfigError("unknown upstream kind '" + std::string(name) +
                    "' (expected echo, canned or http)");
}

void UpstreamConfig::validate() const {
  const bool has_fixture = !fixture_path.empty();
  const bool has_http = !http.base_url.empty() || !http.model.empty() || !http.token_env.empty();
  switch (kind) {
    case UpstreamKind::kEcho:
      if (has_fixture || has_http) throw ConfigError("echo upstream takes no settings");
      break;
    case UpstreamKind::kCanned:
      if (!has_fixture) throw ConfigError("canned upstream needs a fixture path");
      if (has_http) throw ConfigError("canned upstream takes no http settings");
      break;
    case UpstreamKind::kHttpChat:
      if (http.base_url.empty()) throw ConfigError("http upstream needs a base URL");
      if (http.base_url.rfind("http://", 0) != 0) {
        throw ConfigError("http upstream base URL must start with http://");
      }
      if (has_fixture) throw ConfigError("http upstream takes no fixture path");
      break;
  }
  if (http.timeout_ms <= 0) throw ConfigError("upstream timeout must be positive");
}

CannedUpstream::CannedUpstream(Entries entries,
                               std::optional<std::string> fallback)
    : entries_(std::move(entries)), fallback_(std::move(fallback)) {}

CannedUpstream CannedUpstream::from_file(const std::string& path) {
  const Json doc = read_json_file(path);
  if (!doc.is_object()) throw ConfigError(path + ": canned fixture must be a JSON object");
  Entries entries;
  std::optional<std::string> fallback;
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_string()) {
      throw ConfigError(path + ": fixture entry '" + key + "' must be a string");
    }
    if (key == "*") {
      fallback = value.get<std::string>();
    } else {
      entries.emplace(key, value.get<std::string>());
    }
  }
  return CannedUpstream(std::move(entries), std::move(fallback));
}

std::string CannedUpstream::complete(std::string_view prompt) const {
  auto it = entries_.find(prompt);
  if (it != entries_.end()) return it->second;
  if (fallback_) return *fallback_;
  throw UpstreamError("canned upstream has no entry for the prompt and no fallback");
}

HttpChatUpstream::HttpChatUpstream(HttpChatSettings settings) : settings_(std::move(settings)) {
  const std::string& url = settings_.base_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos || url.substr(0, scheme_end) != "http") {
    throw ConfigError("http upstream base URL must start with http://");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  path_ = prefix + "/chat/completions";
}

std::string HttpChatUpstream::complete(std::string_view prompt) const {
  httplib::Client client(scheme_host_port_);
  const auto seconds = settings_.timeout_ms / 1000;
  const auto micros = (settings_.timeout_ms % 1000) * 1000;
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);

  httplib::Headers headers;
  if (!settings_.token_env.empty()) {
    const char* token = std::getenv(settings_.token_env.c_str());
    if (token != nullptr && *token != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }
  const Json request = {
      {"model", settings_.model},
      {"messages", Json::array({{{"role", "user"}, {"content", std::string(prompt)}}})},
  };
  auto result = client.Post(path_, headers, request.dump(), "application/json");
  if (!result) {
    throw UpstreamError("upstream request failed: " + httplib::to_string(result.error()));
  }
  if (result->status < 200 || result->status >= 300) {
    throw UpstreamError("upstream returned HTTP " + std::to_string(result->status));
  }
  try {
    const Json body = Json::parse(result->body);
    return body.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const Json::exception& e) {
    throw UpstreamError(std::string("malformed upstream body: ") + e.what());
  }
}

std::unique_ptr<Upstream> make_upstream(const UpstreamConfig& config) {
  config.validate();
  switch (config.kind) {
    case UpstreamKind::kEcho:
      return std::make_unique<EchoUpstream>();
    case UpstreamKind::kCanned:
      return std::make_unique<CannedUpstream>(CannedUpstream::from_file(config.fixture_path));
    case UpstreamKind::kHttpChat:
      return std::make_unique<HttpChatUpstream>(config.http);
  }
  throw ConfigError("unknown upstream kind");
}

std::string upstream_call(const UpstreamConfig& config, std::string_view prompt) {
  return make_upstream(config)->complete(prompt);
}

}  // namespace llmguard

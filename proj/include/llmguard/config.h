#pragma once

// JSON documents for policies plus small strict-parsing helpers shared by
// the manifest, corpus and HTTP schemas.

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "llmguard/core.h"

namespace llmguard {

using Json = nlohmann::json;

// Reads and parses a JSON file; throws ConfigError naming the path.
Json read_json_file(const std::filesystem::path& path);

// Throws ConfigError if `object` is not an object or carries a key outside
// `allowed`. `where` prefixes the message.
void require_known_keys(const Json& object, std::initializer_list<std::string_view> allowed,
                        std::string_view where);

// Parses a policy document. When `base` is given, entries overlay the base
// policy: omitted fields keep the base values and ids absent from the base
// are rejected. Without a base every entry must list its phases.
Policy policy_from_json(const Json& doc, const Policy* base = nullptr);
Json policy_to_json(const Policy& policy);

Policy load_policy_file(const std::filesystem::path& path, const Policy* base = nullptr);

}  // namespace llmguard

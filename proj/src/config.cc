#include "llmguard/config.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "llmguard/errors.h"

namespace llmguard {

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return Json::parse(buffer.str());
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void require_known_keys(const Json& object, std::initializer_list<std::string_view> allowed,
                        std::string_view where) {
  if (!object.is_object()) {
    throw ConfigError(std::string(where) + ": expected an object");
  }
  for (const auto& item : object.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw ConfigError(std::string(where) + ": unknown key '" + item.key() + "'");
    }
  }
}

namespace {

std::set<Phase> phases_from_json(const Json& value, const std::string& where) {
  if (!value.is_array()) throw ConfigError(where + ".phases: expected an array");
  std::set<Phase> phases;
  for (const auto& item : value) {
    if (!item.is_string()) throw ConfigError(where + ".phases: expected strings");
    phases.insert(parse_phase(item.get<std::string>()));
  }
  return phases;
}

}  // namespace

Policy policy_from_json(const Json& doc, const Policy* base) {
  require_known_keys(doc, {"block_message", "short_circuit", "detectors"}, "policy");

  std::string block_message = base ? base->block_message() : std::string(kDefaultBlockMessage);
  bool short_circuit = base ? base->short_circuit() : false;
  if (doc.contains("block_message")) {
    if (!doc["block_message"].is_string()) {
      throw ConfigError("policy.block_message: expected a string");
    }
    block_message = doc["block_message"].get<std::string>();
  }
  if (doc.contains("short_circuit")) {
    if (!doc["short_circuit"].is_boolean()) {
      throw ConfigError("policy.short_circuit: expected a boolean");
    }
    short_circuit = doc["short_circuit"].get<bool>();
  }

  std::map<std::string, DetectorPolicy> entries;
  if (base) {
    for (const auto& entry : base->detectors()) entries[entry.detector_id] = entry;
  }
  if (doc.contains("detectors")) {
    const Json& detectors = doc["detectors"];
    if (!detectors.is_object()) throw ConfigError("policy.detectors: expected an object");
    for (const auto& [id, value] : detectors.items()) {
      const std::string where = "policy.detectors." + id;
      require_known_keys(value, {"enabled", "threshold", "phases"}, where);
      auto it = entries.find(id);
      if (base && it == entries.end()) {
        throw ConfigError(where + ": detector is not in the manifest");
      }
      DetectorPolicy entry = it != entries.end() ? it->second : DetectorPolicy{id, true, 0.5, {}};
      if (value.contains("enabled")) {
        if (!value["enabled"].is_boolean()) throw ConfigError(where + ".enabled: expected a boolean");
        entry.enabled = value["enabled"].get<bool>();
      }
      if (value.contains("threshold")) {
        if (!value["threshold"].is_number()) throw ConfigError(where + ".threshold: expected a number");
        entry.threshold = value["threshold"].get<double>();
      }
      if (value.contains("phases")) {
        entry.phases = phases_from_json(value["phases"], where);
      } else if (!base) {
        throw ConfigError(where + ": missing phases");
      }
      entries[id] = std::move(entry);
    }
  }

  std::vector<DetectorPolicy> list;
  for (auto& [id, entry] : entries) list.push_back(std::move(entry));
  return Policy(std::move(list), std::move(block_message), short_circuit);
}

Json policy_to_json(const Policy& policy) {
  Json detectors = Json::object();
  for (const auto& entry : policy.detectors()) {
    Json phases = Json::array();
    for (Phase phase : entry.phases) phases.push_back(phase_name(phase));
    detectors[entry.detector_id] = {
        {"enabled", entry.enabled}, {"threshold", entry.threshold}, {"phases", phases}};
  }
  return {{"block_message", policy.block_message()},
          {"short_circuit", policy.short_circuit()},
          {"detectors", detectors}};
}

Policy load_policy_file(const std::filesystem::path& path, const Policy* base) {
  Json doc = read_json_file(path);
  try {
    return policy_from_json(doc, base);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace llmguard

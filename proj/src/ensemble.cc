#include "llmguard/ensemble.h"

#include "llmguard/config.h"
#include "llmguard/errors.h"

namespace llmguard {

std::vector<DetectorReport> guard_text(const DetectorRegistry& registry, const Policy& policy,
                                       std::string_view text, Phase phase) {
  std::vector<DetectorReport> reports;
  for (const auto& entry : policy.detectors()) {
    if (!entry.applies_to(phase)) continue;
    const Detector* detector = registry.find(entry.detector_id);
    if (detector == nullptr) {
      throw ConfigError("policy enables detector '" + entry.detector_id +
                        "' which is not in the registry");
    }
    reports.push_back(detector->detect(text, phase, entry.threshold));
    if (policy.short_circuit() && reports.back().flagged) break;
  }
  return reports;
}

Verdict guard_exchange(const DetectorRegistry& registry, const Policy& policy,
                       Exchange& exchange, const Upstream& upstream) {
  std::vector<DetectorReport> reports =
      guard_text(registry, policy, exchange.prompt, Phase::kPrompt);
  for (const auto& report : reports) {
    if (report.flagged) return evaluate_policy(std::move(reports), policy);
  }

  std::string response;
  try {
    response = upstream.complete(exchange.prompt);
  } catch (const UpstreamError&) {
    throw;
  } catch (const std::exception& e) {
    throw UpstreamError(e.what());
  }
  exchange.response = response;

  auto response_reports = guard_text(registry, policy, response, Phase::kResponse);
  reports.insert(reports.end(), std::make_move_iterator(response_reports.begin()),
                 std::make_move_iterator(response_reports.end()));
  return evaluate_policy(std::move(reports), policy, response);
}

GuardConfig load_guard_config(const std::filesystem::path& config_dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(config_dir, ec)) {
    throw ConfigError("config directory not found: " + config_dir.string());
  }
  GuardConfig config;
  auto registry = std::make_shared<DetectorRegistry>(registry_load(config_dir));
  const Policy base = registry->manifest_policy();
  const auto policy_path = config_dir / "policy.json";
  config.policy = std::filesystem::exists(policy_path, ec) ? load_policy_file(policy_path, &base)
                                                          : base;
  config.registry = std::move(registry);
  return config;
}

}  // namespace llmguard

#pragma once

// Runs the enabled detectors over each phase of an exchange and turns their
// reports into a verdict.

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "llmguard/core.h"
#include "llmguard/detectors.h"

namespace llmguard {

// The LLM being protected. Implementations must be safe to call from
// several threads and report failures as UpstreamError.
class Upstream {
 public:
  virtual ~Upstream() = default;
  virtual std::string complete(std::string_view prompt) const = 0;
};

// Reports from every enabled detector routed to `phase`, in detector id
// order. With short_circuit set, stops after the first flagged report.
// Throws ConfigError when an enabled policy entry has no registry detector.
std::vector<DetectorReport> guard_text(const DetectorRegistry& registry, const Policy& policy,
                                       std::string_view text, Phase phase);

// Screens the prompt; a flagged prompt blocks without calling the upstream.
// Otherwise the upstream response is screened and either delivered verbatim
// or replaced by the block message. Fills exchange.response when the
// upstream is called. Upstream failures propagate as UpstreamError.
Verdict guard_exchange(const DetectorRegistry& registry, const Policy& policy,
                       Exchange& exchange, const Upstream& upstream);

// A loaded config directory: manifest.json + bundles, and the effective
// policy (manifest defaults overlaid by policy.json when present).
struct GuardConfig {
  std::shared_ptr<const DetectorRegistry> registry;
  Policy policy;
};

GuardConfig load_guard_config(const std::filesystem::path& config_dir);

}  // namespace llmguard

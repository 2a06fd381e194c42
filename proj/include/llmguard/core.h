#pragma once

// Domain types shared by every module: phases, spans, detector reports,
// verdicts and the policy that turns reports into verdicts.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace llmguard {

enum class Phase { kPrompt, kResponse };

std::string_view phase_name(Phase phase);
// Accepts "Prompt" / "Response"; throws ConfigError otherwise.
Phase parse_phase(std::string_view name);

struct Exchange {
  std::string request_id;
  std::string prompt;
  std::optional<std::string> response;
};

// Half-open byte range [start, end) into a scanned text.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string label;

  std::size_t length() const { return end - start; }
  bool operator==(const Span&) const = default;
};

// Sorts by start and folds overlapping or touching ranges with the same
// label; overlapping ranges with different labels keep the earlier one.
std::vector<Span> merge_spans(std::vector<Span> spans);

struct DetectorReport {
  std::string detector_id;
  Phase phase = Phase::kPrompt;
  double score = 0.0;
  bool flagged = false;
  std::vector<Span> spans;
  double threshold_used = 0.5;

  bool operator==(const DetectorReport&) const = default;
};

// Builds a report whose flag is the strict comparison score > threshold.
DetectorReport make_report(std::string detector_id, Phase phase, double score,
                           double threshold, std::vector<Span> spans = {});

enum class Decision { kAllow, kBlock };

std::string_view decision_name(Decision decision);

struct Verdict {
  Decision decision = Decision::kAllow;
  std::vector<DetectorReport> reports;
  std::string delivered_text;
  // Set when decision is Block: the phase whose reports triggered it.
  std::optional<Phase> blocked_phase;

  std::vector<std::string> triggering_detectors() const;
};

struct DetectorPolicy {
  std::string detector_id;
  bool enabled = true;
  double threshold = 0.5;
  std::set<Phase> phases;

  bool applies_to(Phase phase) const { return enabled && phases.contains(phase); }
  bool operator==(const DetectorPolicy&) const = default;
};

inline constexpr std::string_view kDefaultBlockMessage =
    "Your request was blocked by LLMGuard policy.";

// Detector ids of the built-in ensemble, in id order.
const std::vector<std::string>& builtin_detector_ids();

class Policy {
 public:
  Policy() = default;

  // Validates thresholds, phases and id uniqueness; throws ConfigError.
  Policy(std::vector<DetectorPolicy> detectors, std::string block_message,
         bool short_circuit);

  // Entries sorted by detector id.
  const std::vector<DetectorPolicy>& detectors() const { return detectors_; }
  const DetectorPolicy* find(std::string_view detector_id) const;
  const std::string& block_message() const { return block_message_; }
  bool short_circuit() const { return short_circuit_; }

  bool operator==(const Policy&) const = default;

 private:
  std::vector<DetectorPolicy> detectors_;
  std::string block_message_{kDefaultBlockMessage};
  bool short_circuit_ = false;
};

Policy default_policy();

// Aggregates reports into a verdict: Block iff any report is flagged.
// Reports are ordered by (phase, detector_id). On Allow the delivered text
// is `allow_text`; on Block it is the policy's block message.
Verdict evaluate_policy(std::vector<DetectorReport> reports,
                        const Policy& policy, std::string_view allow_text = {});

}  // namespace llmguard

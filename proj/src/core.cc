#include "llmguard/core.h"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <utility>

#include "llmguard/errors.h"

namespace llmguard {

std::string_view phase_name(Phase phase) {
  return phase == Phase::kPrompt ? "Prompt" : "Response";
}

Phase parse_phase(std::string_view name) {
  if (name == "Prompt") return Phase::kPrompt;
  if (name == "Response") return Phase::kResponse;
  throw ConfigError("unknown phase '" + std::string(name) +
                    "' (expected Prompt or Response)");
}

std::string_view decision_name(Decision decision) {
  return decision == Decision::kAllow ? "Allow" : "Block";
}

std::vector<Span> merge_spans(std::vector<Span> spans) {
  std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
    return std::tie(a.start, b.end, a.label) < std::tie(b.start, a.end, b.label);
  });
  std::vector<Span> merged;
  for (auto& span : spans) {
    if (span.start >= span.end) continue;
    if (!merged.empty() && span.start <= merged.back().end) {
      Span& last = merged.back();
      if (span.label == last.label) {
        last.end = std::max(last.end, span.end);
        continue;
      }
      if (span.start < last.end) continue;
    }
    merged.push_back(std::move(span));
  }
  return merged;
}

DetectorReport make_report(std::string detector_id, Phase phase, double score,
                           double threshold, std::vector<Span> spans) {
  DetectorReport report;
  report.detector_id = std::move(detector_id);
  report.phase = phase;
  report.score = std::clamp(score, 0.0, 1.0);
  report.threshold_used = threshold;
  report.flagged = report.score > threshold;
  report.spans = merge_spans(std::move(spans));
  return report;
}

std::vector<std::string> Verdict::triggering_detectors() const {
  std::vector<std::string> ids;
  for (const auto& report : reports) {
    if (report.flagged) ids.push_back(report.detector_id);
  }
  return ids;
}

const std::vector<std::string>& builtin_detector_ids() {
  static const std::vector<std::string> ids = {
      "pii",           "racial_bias",    "topic:politics", "topic:religion",
      "topic:sports",  "toxicity",       "violence"};
  return ids;
}

Policy::Policy(std::vector<DetectorPolicy> detectors, std::string block_message,
               bool short_circuit)
    : detectors_(std::move(detectors)),
      block_message_(std::move(block_message)),
      short_circuit_(short_circuit) {
  std::sort(detectors_.begin(), detectors_.end(),
            [](const DetectorPolicy& a, const DetectorPolicy& b) {
              return a.detector_id < b.detector_id;
            });
  for (std::size_t i = 0; i < detectors_.size(); ++i) {
    const auto& entry = detectors_[i];
    if (entry.detector_id.empty()) throw ConfigError("empty detector id");
    if (i > 0 && detectors_[i - 1].detector_id == entry.detector_id) {
      throw ConfigError("duplicate detector id '" + entry.detector_id + "'");
    }
    if (!(entry.threshold >= 0.0 && entry.threshold <= 1.0)) {
      throw ConfigError("detector '" + entry.detector_id +
                        "': threshold must lie in [0, 1]");
    }
    if (entry.enabled && entry.phases.empty()) {
      throw ConfigError("detector '" + entry.detector_id +
                        "': enabled detectors need at least one phase");
    }
  }
}

const DetectorPolicy* Policy::find(std::string_view detector_id) const {
  auto it = std::lower_bound(
      detectors_.begin(), detectors_.end(), detector_id,
      [](const DetectorPolicy& e, std::string_view id) { return e.detector_id < id; });
  if (it == detectors_.end() || it->detector_id != detector_id) return nullptr;
  return &*it;
}

Policy default_policy() {
  const std::set<Phase> both = {Phase::kPrompt, Phase::kResponse};
  std::vector<DetectorPolicy> entries;
  for (const auto& id : builtin_detector_ids()) {
    DetectorPolicy entry{id, true, 0.5, both};
    if (id == "pii") entry.phases = {Phase::kPrompt};
    if (id == "violence") entry.phases = {Phase::kResponse};
    entries.push_back(std::move(entry));
  }
  return Policy(std::move(entries), std::string(kDefaultBlockMessage), false);
}

Verdict evaluate_policy(std::vector<DetectorReport> reports,
                        const Policy& policy, std::string_view allow_text) {
  for (const auto& report : reports) {
    const DetectorPolicy* entry = policy.find(report.detector_id);
    if (entry == nullptr) {
      throw ConfigError("report from detector '" + report.detector_id +
                        "' which is not in the policy");
    }
    if (!entry->enabled) {
      throw ConfigError("report from disabled detector '" + report.detector_id + "'");
    }
  }
  std::stable_sort(reports.begin(), reports.end(),
                   [](const DetectorReport& a, const DetectorReport& b) {
                     return std::tie(a.phase, a.detector_id) <
                            std::tie(b.phase, b.detector_id);
                   });

  Verdict verdict;
  auto first_flag = std::find_if(reports.begin(), reports.end(),
                                 [](const DetectorReport& r) { return r.flagged; });
  if (first_flag != reports.end()) {
    verdict.decision = Decision::kBlock;
    verdict.blocked_phase = first_flag->phase;
    verdict.delivered_text = policy.block_message();
  } else {
    verdict.delivered_text = std::string(allow_text);
  }
  verdict.reports = std::move(reports);
  return verdict;
}

}  // namespace llmguard

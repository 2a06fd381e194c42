#include "llmguard/detectors.h"

#include <algorithm>
#include <tuple>

#include "llmguard/errors.h"
#include "llmguard/textprep.h"

namespace llmguard {

std::string_view kind_name(DetectorKind kind) {
  return kind == DetectorKind::kRegex ? "regex" : "classifier";
}

std::vector<Span> attribute_spans(const ModelBundle& bundle, std::string_view text,
                                  double base_score, const AttributionConfig& config) {
  const std::vector<Token> tokens = tokenize(text);
  std::vector<double> counts(bundle.vocabulary.size(), 0.0);
  std::map<std::size_t, std::vector<Span>> occurrences;
  for (const auto& token : tokens) {
    const std::size_t index = bundle.vocabulary.index_of(token.text);
    if (index >= counts.size()) continue;
    counts[index] += 1.0;
    occurrences[index].push_back(token.span);
  }

  struct Candidate {
    double drop;
    std::size_t index;
  };
  std::vector<Candidate> kept;
  for (const auto& [index, spans] : occurrences) {
    std::vector<double> occluded = counts;
    occluded[index] = 0.0;
    const auto heads = forward(bundle.model, occluded);
    const double drop = base_score - *std::max_element(heads.begin(), heads.end());
    if (drop >= config.min_drop) kept.push_back({drop, index});
  }
  std::sort(kept.begin(), kept.end(), [&](const Candidate& a, const Candidate& b) {
    if (a.drop != b.drop) return a.drop > b.drop;
    return bundle.vocabulary.token(a.index) < bundle.vocabulary.token(b.index);
  });
  if (kept.size() > config.max_tokens) kept.resize(config.max_tokens);

  std::vector<Span> spans;
  for (const auto& candidate : kept) {
    for (const auto& span : occurrences[candidate.index]) spans.push_back(span);
  }
  std::sort(spans.begin(), spans.end(),
            [](const Span& a, const Span& b) { return a.start < b.start; });
  return spans;
}

RegexDetector::RegexDetector(std::string id, PiiPatternSet patterns)
    : Detector(std::move(id)), patterns_(std::move(patterns)) {}

DetectorReport RegexDetector::detect(std::string_view text, Phase phase,
                                     double threshold) const {
  std::vector<Span> spans = pii_scan(text, patterns_);
  const double score = spans.empty() ? 0.0 : 1.0;
  return make_report(id(), phase, score, threshold, std::move(spans));
}

ClassifierDetector::ClassifierDetector(std::string id, ModelBundle bundle,
                                       AttributionConfig attribution)
    : Detector(std::move(id)), bundle_(std::move(bundle)), attribution_(attribution) {
  bundle_.validate();
}

DetectorReport ClassifierDetector::detect(std::string_view text, Phase phase,
                                          double threshold) const {
  const double score = bundle_.score(text);
  DetectorReport report = make_report(id(), phase, score, threshold);
  if (report.flagged) {
    report.spans = merge_spans(attribute_spans(bundle_, text, score, attribution_));
  }
  return report;
}

std::vector<ManifestEntry> parse_manifest(const Json& doc) {
  require_known_keys(doc, {"detectors"}, "manifest");
  if (!doc.contains("detectors") || !doc["detectors"].is_array()) {
    throw ConfigError("manifest: expected a 'detectors' array");
  }
  std::vector<ManifestEntry> entries;
  std::set<std::string> seen;
  for (const auto& item : doc["detectors"]) {
    if (!item.is_object()) throw ConfigError("manifest: detector entries must be objects");
    ManifestEntry entry;
    if (!item.contains("id") || !item["id"].is_string()) {
      throw ConfigError("manifest: detector entry without a string 'id'");
    }
    entry.id = item["id"].get<std::string>();
    const std::string where = "manifest detector '" + entry.id + "'";
    if (entry.id.empty()) throw ConfigError("manifest: empty detector id");
    if (!seen.insert(entry.id).second) throw ConfigError(where + ": duplicate id");
    if (!item.contains("kind") || !item["kind"].is_string()) {
      throw ConfigError(where + ": missing 'kind'");
    }
    const std::string kind = item["kind"].get<std::string>();
    if (kind == "regex") {
      entry.kind = DetectorKind::kRegex;
      require_known_keys(item, {"id", "kind", "patterns", "threshold", "phases"}, where);
      entry.resource = item.value("patterns", std::string("builtin"));
    } else if (kind == "classifier") {
      entry.kind = DetectorKind::kClassifier;
      require_known_keys(item, {"id", "kind", "bundle", "threshold", "phases", "attribution"},
                         where);
      if (!item.contains("bundle") || !item["bundle"].is_string()) {
        throw ConfigError(where + ": classifier detectors need a 'bundle' path");
      }
      entry.resource = item["bundle"].get<std::string>();
      if (item.contains("attribution")) {
        const Json& attribution = item["attribution"];
        require_known_keys(attribution, {"min_drop", "max_tokens"}, where + ".attribution");
        entry.attribution.min_drop = attribution.value("min_drop", entry.attribution.min_drop);
        entry.attribution.max_tokens =
            attribution.value("max_tokens", entry.attribution.max_tokens);
      }
    } else {
      throw ConfigError(where + ": unknown detector kind '" + kind + "'");
    }
    if (item.contains("threshold")) {
      if (!item["threshold"].is_number()) throw ConfigError(where + ": threshold must be a number");
      entry.threshold = item["threshold"].get<double>();
      if (!(entry.threshold >= 0.0 && entry.threshold <= 1.0)) {
        throw ConfigError(where + ": threshold must lie in [0, 1]");
      }
    }
    if (item.contains("phases")) {
      if (!item["phases"].is_array()) throw ConfigError(where + ": phases must be an array");
      entry.phases.clear();
      for (const auto& phase : item["phases"]) {
        if (!phase.is_string()) throw ConfigError(where + ": phases must be strings");
        entry.phases.insert(parse_phase(phase.get<std::string>()));
      }
      if (entry.phases.empty()) throw ConfigError(where + ": phases must not be empty");
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

DetectorRegistry::DetectorRegistry(std::vector<ManifestEntry> entries,
                                   std::vector<std::shared_ptr<const Detector>> detectors)
    : entries_(std::move(entries)) {
  for (auto& detector : detectors) {
    const std::string id = detector->id();
    if (!detectors_.emplace(id, std::move(detector)).second) {
      throw ConfigError("duplicate detector id '" + id + "'");
    }
  }
  for (const auto& entry : entries_) {
    if (!detectors_.contains(entry.id)) {
      throw ConfigError("manifest entry '" + entry.id + "' has no detector");
    }
  }
}

const Detector* DetectorRegistry::find(std::string_view id) const {
  auto it = detectors_.find(id);
  return it == detectors_.end() ? nullptr : it->second.get();
}

std::vector<std::string> DetectorRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, detector] : detectors_) out.push_back(id);
  return out;
}

Policy DetectorRegistry::manifest_policy() const {
  std::vector<DetectorPolicy> policies;
  for (const auto& [id, detector] : detectors_) {
    auto entry = std::find_if(entries_.begin(), entries_.end(),
                              [&](const ManifestEntry& e) { return e.id == id; });
    DetectorPolicy policy{id, true, 0.5, {Phase::kPrompt, Phase::kResponse}};
    if (entry != entries_.end()) {
      policy.threshold = entry->threshold;
      policy.phases = entry->phases;
    }
    policies.push_back(std::move(policy));
  }
  return Policy(std::move(policies), std::string(kDefaultBlockMessage), false);
}

std::shared_ptr<const Detector> load_detector(const ManifestEntry& entry,
                                              const std::filesystem::path& base_dir) {
  try {
    if (entry.kind == DetectorKind::kRegex) {
      if (entry.resource == "builtin") {
        return std::make_shared<RegexDetector>(entry.id, PiiPatternSet::builtin());
      }
      return std::make_shared<RegexDetector>(
          entry.id, PiiPatternSet::from_json(read_json_file(base_dir / entry.resource)));
    }
    return std::make_shared<ClassifierDetector>(
        entry.id, load_bundle(base_dir / entry.resource), entry.attribution);
  } catch (const ResourceError&) {
    throw;
  } catch (const std::exception& e) {
    throw ResourceError(entry.id, e.what());
  }
}

DetectorRegistry registry_load(const std::filesystem::path& config_dir) {
  const auto manifest_path = config_dir / "manifest.json";
  std::error_code ec;
  if (!std::filesystem::is_regular_file(manifest_path, ec)) {
    throw ConfigError("manifest not found: " + manifest_path.string());
  }
  std::vector<ManifestEntry> entries;
  try {
    entries = parse_manifest(read_json_file(manifest_path));
  } catch (const ConfigError& e) {
    throw ConfigError(manifest_path.string() + ": " + e.what());
  }
  std::vector<std::shared_ptr<const Detector>> detectors;
  for (const auto& entry : entries) detectors.push_back(load_detector(entry, config_dir));
  return DetectorRegistry(std::move(entries), std::move(detectors));
}

}  // namespace llmguard

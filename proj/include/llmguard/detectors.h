#pragma once

// The detector library: a uniform interface over regex and classifier
// detectors, occlusion-based span attribution, and the manifest-driven
// registry.
//
// Manifest (config_dir/manifest.json):
//
//   {"detectors": [
//     {"id": "pii", "kind": "regex", "patterns": "builtin",
//      "threshold": 0.5, "phases": ["Prompt"]},
//     {"id": "toxicity", "kind": "classifier", "bundle": "bundles/toxicity.llmg",
//      "threshold": 0.5, "phases": ["Prompt", "Response"],
//      "attribution": {"min_drop": 0.05, "max_tokens": 10}}
//   ]}
//
// Resource paths are relative to the config directory. See docs/config.md.

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "llmguard/bundle.h"
#include "llmguard/core.h"
#include "llmguard/pii.h"

namespace llmguard {

enum class DetectorKind { kRegex, kClassifier };

std::string_view kind_name(DetectorKind kind);

struct AttributionConfig {
  double min_drop = 0.05;
  std::size_t max_tokens = 10;
};

// Leave-one-out occlusion: each distinct in-vocabulary token is zeroed in
// the count vector and the text rescored. Tokens whose removal lowers the
// score by at least min_drop contribute every occurrence span (labeled with
// the token), keeping the max_tokens largest drops. Spans sorted by start.
std::vector<Span> attribute_spans(const ModelBundle& bundle, std::string_view text,
                                  double base_score, const AttributionConfig& config = {});

class Detector {
 public:
  explicit Detector(std::string id) : id_(std::move(id)) {}
  virtual ~Detector() = default;

  const std::string& id() const { return id_; }
  virtual DetectorKind kind() const = 0;
  // flagged == (score > threshold).
  virtual DetectorReport detect(std::string_view text, Phase phase, double threshold) const = 0;

 private:
  std::string id_;
};

// Score 1.0 when any pattern matches, else 0.0; spans are the pii_scan hits.
class RegexDetector : public Detector {
 public:
  RegexDetector(std::string id, PiiPatternSet patterns);
  DetectorKind kind() const override { return DetectorKind::kRegex; }
  DetectorReport detect(std::string_view text, Phase phase, double threshold) const override;
  const PiiPatternSet& patterns() const { return patterns_; }

 private:
  PiiPatternSet patterns_;
};

// Score is the maximum head probability of the bundle; spans come from
// occlusion attribution when the report is flagged.
class ClassifierDetector : public Detector {
 public:
  ClassifierDetector(std::string id, ModelBundle bundle, AttributionConfig attribution = {});
  DetectorKind kind() const override { return DetectorKind::kClassifier; }
  DetectorReport detect(std::string_view text, Phase phase, double threshold) const override;
  const ModelBundle& bundle() const { return bundle_; }

 private:
  ModelBundle bundle_;
  AttributionConfig attribution_;
};

struct ManifestEntry {
  std::string id;
  DetectorKind kind = DetectorKind::kRegex;
  std::string resource;  // bundle path, pattern file path, or "builtin"
  double threshold = 0.5;
  std::set<Phase> phases = {Phase::kPrompt, Phase::kResponse};
  AttributionConfig attribution;
};

// Parses a manifest document; throws ConfigError on unknown kinds or keys.
std::vector<ManifestEntry> parse_manifest(const Json& doc);

// Immutable after construction; detect is safe to call concurrently.
class DetectorRegistry {
 public:
  DetectorRegistry() = default;
  DetectorRegistry(std::vector<ManifestEntry> entries,
                   std::vector<std::shared_ptr<const Detector>> detectors);

  const Detector* find(std::string_view id) const;
  std::vector<std::string> ids() const;
  std::size_t size() const { return detectors_.size(); }
  bool empty() const { return detectors_.empty(); }
  const std::vector<ManifestEntry>& entries() const { return entries_; }

  // Every registered detector enabled with its manifest threshold and phases.
  Policy manifest_policy() const;

 private:
  std::vector<ManifestEntry> entries_;
  std::map<std::string, std::shared_ptr<const Detector>, std::less<>> detectors_;
};

// Builds a detector from one manifest entry; resources resolve against
// base_dir. Throws ResourceError naming the detector.
std::shared_ptr<const Detector> load_detector(const ManifestEntry& entry,
                                              const std::filesystem::path& base_dir);

// Loads config_dir/manifest.json and every resource it names, all or
// nothing. Throws ConfigError when the manifest is missing or invalid and
// ResourceError when a detector's resource cannot be loaded.
DetectorRegistry registry_load(const std::filesystem::path& config_dir);

}  // namespace llmguard

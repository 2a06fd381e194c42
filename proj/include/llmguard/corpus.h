#pragma once

// Labeled corpora: JSON-lines ingestion, seeded splitting, synthetic
// generation, and per-head evaluation metrics.
//
// Corpus line:   {"text": "...", "labels": {"violence": 1}}
// Template spec: {"labels": {"<head>": ["phrase", ...]}, "filler": [...],
//                 "min_filler"?: 2, "max_filler"?: 5,
//                 "min_label_phrases"?: 1, "max_label_phrases"?: 2}

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "llmguard/bundle.h"
#include "llmguard/config.h"

namespace llmguard {

struct LabeledExample {
  std::string text;
  std::map<std::string, int> labels;  // head -> 0 or 1

  bool operator==(const LabeledExample&) const = default;
};

using Corpus = std::vector<LabeledExample>;

// Preserves file order. Throws IngestionError with the 1-based line number
// on malformed records, non-binary labels, or inconsistent label names.
Corpus load_corpus(const std::filesystem::path& path);
std::string corpus_to_jsonl(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

// Label names of the corpus (sorted); empty for an empty corpus.
std::vector<std::string> label_names(const Corpus& corpus);

// Seeded shuffle then partition: the test side gets
// round(test_fraction * size) examples, clamped to [1, size - 1] when
// size >= 2. Throws UsageError unless 0 < test_fraction < 1.
std::pair<Corpus, Corpus> split(const Corpus& corpus, double test_fraction, std::uint64_t seed);

// Confusion counts and derived metrics for one head at a fixed threshold
// (predicted positive iff score > threshold).
struct HeadMetrics {
  std::string head;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t true_negatives = 0;
  std::size_t false_negatives = 0;
  double accuracy = 0.0;
  double precision = 0.0;  // 0 when nothing is predicted positive
  double recall = 0.0;     // 0 when there are no positives
  double f1 = 0.0;         // harmonic mean of precision and recall; 0 if both are 0
  std::optional<double> auc;  // absent when only one class is present
};

HeadMetrics binary_metrics(std::string head, const std::vector<double>& scores,
                           const std::vector<int>& labels, double threshold);

// Area under the ROC curve via the Mann-Whitney rank statistic with
// midranks for ties. nullopt when either class is empty.
std::optional<double> roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Per-head metrics of a bundle on a labeled set. Throws UsageError when the
// set is empty or its label names differ from the bundle heads.
std::vector<HeadMetrics> evaluate(const ModelBundle& bundle, const Corpus& test_set,
                                  double threshold);

Json metrics_to_json(const std::vector<HeadMetrics>& metrics);

struct TemplateSpec {
  std::map<std::string, std::vector<std::string>> lexicons;
  std::vector<std::string> filler;
  std::size_t min_filler = 2;
  std::size_t max_filler = 5;
  std::size_t min_label_phrases = 1;
  std::size_t max_label_phrases = 2;

  void validate() const;  // throws UsageError
};

TemplateSpec template_from_json(const Json& doc);
TemplateSpec load_template(const std::filesystem::path& path);

// floor(size / 2) positives, spread round-robin over the heads in name
// order, each embedding lexicon phrases of its head among filler phrases;
// the rest are filler-only negatives. Every example carries every head
// label. The result is shuffled; all draws come from `seed`.
Corpus generate_synthetic_corpus(const TemplateSpec& spec, std::size_t size, std::uint64_t seed);

}  // namespace llmguard

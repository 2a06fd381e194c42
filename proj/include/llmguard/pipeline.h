#pragma once

// Corpus -> split -> vocabulary -> training -> bundle -> held-out metrics.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "llmguard/bundle.h"
#include "llmguard/corpus.h"
#include "llmguard/mlp.h"

namespace llmguard {

struct PipelineOptions {
  TrainConfig train;
  std::size_t max_vocabulary = kDefaultMaxVocabulary;
  std::size_t min_count = kDefaultMinCount;
  double test_fraction = 0.2;
  double threshold = 0.5;
};

struct PipelineResult {
  ModelBundle bundle;
  Corpus train_set;
  Corpus test_set;
  std::vector<HeadMetrics> metrics;  // on test_set
};

// Count vectors and head targets in `heads` order.
std::vector<Example> to_examples(const Corpus& corpus, const Vocabulary& vocabulary,
                                 const std::vector<std::string>& heads);

// Splits with train.seed, builds the vocabulary from the training side only,
// trains, and evaluates on the held-out side. `heads` empty means the
// corpus label names. Throws UsageError when heads and labels disagree.
PipelineResult train_detector(const Corpus& corpus, std::vector<std::string> heads,
                              const PipelineOptions& options);

}  // namespace llmguard

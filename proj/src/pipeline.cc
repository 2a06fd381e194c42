#include "llmguard/pipeline.h"

#include <algorithm>

#include "llmguard/errors.h"

namespace llmguard {

std::vector<Example> to_examples(const Corpus& corpus, const Vocabulary& vocabulary,
                                 const std::vector<std::string>& heads) {
  std::vector<Example> examples;
  examples.reserve(corpus.size());
  for (const auto& item : corpus) {
    Example example;
    example.features = vectorize(item.text, vocabulary);
    for (const auto& head : heads) {
      auto it = item.labels.find(head);
      if (it == item.labels.end()) throw UsageError("example is missing label '" + head + "'");
      example.targets.push_back(static_cast<double>(it->second));
    }
    examples.push_back(std::move(example));
  }
  return examples;
}

PipelineResult train_detector(const Corpus& corpus, std::vector<std::string> heads,
                              const PipelineOptions& options) {
  if (corpus.size() < 2) throw UsageError("corpus needs at least two examples to split");
  const auto names = label_names(corpus);
  if (heads.empty()) heads = names;
  std::vector<std::string> sorted = heads;
  std::sort(sorted.begin(), sorted.end());
  if (sorted != names) throw UsageError("head names do not match the corpus labels");

  PipelineResult result;
  std::tie(result.train_set, result.test_set) =
      split(corpus, options.test_fraction, options.train.seed);

  std::vector<std::string> texts;
  texts.reserve(result.train_set.size());
  for (const auto& example : result.train_set) texts.push_back(example.text);
  Vocabulary vocabulary = build_vocabulary(texts, options.max_vocabulary, options.min_count);
  if (vocabulary.empty()) throw UsageError("training split produced an empty vocabulary");

  const auto examples = to_examples(result.train_set, vocabulary, heads);
  TrainResult trained = train(examples, options.train);

  result.bundle.vocabulary = std::move(vocabulary);
  result.bundle.model = std::move(trained.model);
  result.bundle.head_names = std::move(heads);
  result.bundle.training = {options.train.seed, options.train.epochs, trained.final_loss};
  result.metrics = evaluate(result.bundle, result.test_set, options.threshold);
  return result;
}

}  // namespace llmguard

#include "llmguard/corpus.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "llmguard/errors.h"
#include "llmguard/rng.h"

namespace llmguard {

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(path.string(), 0, "cannot open corpus file");
  Corpus corpus;
  std::set<std::string> expected_labels;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    auto fail = [&](const std::string& detail) -> IngestionError {
      return IngestionError(path.string(), line_number, detail);
    };
    Json record;
    try {
      record = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw fail(std::string("malformed JSON: ") + e.what());
    }
    if (!record.is_object()) throw fail("record must be a JSON object");
    for (const auto& item : record.items()) {
      if (item.key() != "text" && item.key() != "labels") {
        throw fail("unknown field '" + item.key() + "'");
      }
    }
    if (!record.contains("text") || !record["text"].is_string()) {
      throw fail("missing string field 'text'");
    }
    if (!record.contains("labels") || !record["labels"].is_object() || record["labels"].empty()) {
      throw fail("missing or empty object field 'labels'");
    }
    LabeledExample example;
    example.text = record["text"].get<std::string>();
    std::set<std::string> names;
    for (const auto& [name, value] : record["labels"].items()) {
      int label;
      if (value.is_boolean()) {
        label = value.get<bool>() ? 1 : 0;
      } else if (value.is_number_integer() && (value.get<long long>() == 0 || value.get<long long>() == 1)) {
        label = static_cast<int>(value.get<long long>());
      } else {
        throw fail("label '" + name + "' must be 0 or 1, got " + value.dump());
      }
      example.labels.emplace(name, label);
      names.insert(name);
    }
    if (corpus.empty()) {
      expected_labels = names;
    } else if (names != expected_labels) {
      throw fail("label names differ from earlier records");
    }
    corpus.push_back(std::move(example));
  }
  if (in.bad()) throw IngestionError(path.string(), line_number, "read error");
  return corpus;
}

std::string corpus_to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& example : corpus) {
    Json labels = Json::object();
    for (const auto& [name, value] : example.labels) labels[name] = value;
    out += Json{{"text", example.text}, {"labels", labels}}.dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write corpus to " + path.string());
  out << corpus_to_jsonl(corpus);
}

std::vector<std::string> label_names(const Corpus& corpus) {
  std::vector<std::string> names;
  if (corpus.empty()) return names;
  for (const auto& [name, value] : corpus.front().labels) names.push_back(name);
  return names;
}

std::pair<Corpus, Corpus> split(const Corpus& corpus, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw UsageError("test_fraction must lie strictly between 0 and 1");
  }
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  DeterministicRng rng(seed);
  rng.shuffle(order);

  auto test_size = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(corpus.size())));
  if (corpus.size() >= 2) test_size = std::clamp<std::size_t>(test_size, 1, corpus.size() - 1);

  Corpus train;
  Corpus test;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < test_size ? test : train).push_back(corpus[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

std::optional<double> roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw ShapeError("roc_auc: scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks are 1-based; the tie group occupies ranks i+1 .. j.
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        positive_rank_sum += midrank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;
  const double np = static_cast<double>(positives);
  const double nn = static_cast<double>(negatives);
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

HeadMetrics binary_metrics(std::string head, const std::vector<double>& scores,
                           const std::vector<int>& labels, double threshold) {
  if (scores.size() != labels.size()) {
    throw ShapeError("binary_metrics: scores and labels differ in length");
  }
  if (scores.empty()) throw UsageError("binary_metrics: empty input");
  HeadMetrics m;
  m.head = std::move(head);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] > threshold;
    const bool actual = labels[i] == 1;
    if (predicted && actual) ++m.true_positives;
    if (predicted && !actual) ++m.false_positives;
    if (!predicted && !actual) ++m.true_negatives;
    if (!predicted && actual) ++m.false_negatives;
  }
  const auto tp = static_cast<double>(m.true_positives);
  const auto fp = static_cast<double>(m.false_positives);
  const auto fn = static_cast<double>(m.false_negatives);
  m.accuracy = static_cast<double>(m.true_positives + m.true_negatives) /
               static_cast<double>(scores.size());
  m.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  m.auc = roc_auc(scores, labels);
  return m;
}

std::vector<HeadMetrics> evaluate(const ModelBundle& bundle, const Corpus& test_set,
                                  double threshold) {
  if (test_set.empty()) throw UsageError("evaluate: empty test set");
  const auto names = label_names(test_set);
  std::vector<std::string> heads = bundle.head_names;
  std::sort(heads.begin(), heads.end());
  if (names != heads) {
    throw UsageError("corpus label names do not match the bundle heads");
  }
  const std::size_t head_count = bundle.head_names.size();
  std::vector<std::vector<double>> scores(head_count);
  std::vector<std::vector<int>> labels(head_count);
  for (const auto& example : test_set) {
    const auto probabilities = bundle.head_scores(example.text);
    for (std::size_t h = 0; h < head_count; ++h) {
      auto it = example.labels.find(bundle.head_names[h]);
      if (it == example.labels.end()) {
        throw UsageError("example is missing label '" + bundle.head_names[h] + "'");
      }
      scores[h].push_back(probabilities[h]);
      labels[h].push_back(it->second);
    }
  }
  std::vector<HeadMetrics> out;
  for (std::size_t h = 0; h < head_count; ++h) {
    out.push_back(binary_metrics(bundle.head_names[h], scores[h], labels[h], threshold));
  }
  return out;
}

Json metrics_to_json(const std::vector<HeadMetrics>& metrics) {
  Json heads = Json::array();
  for (const auto& m : metrics) {
    heads.push_back({{"head", m.head},
                     {"tp", m.true_positives},
                     {"fp", m.false_positives},
                     {"tn", m.true_negatives},
                     {"fn", m.false_negatives},
                     {"accuracy", m.accuracy},
                     {"precision", m.precision},
                     {"recall", m.recall},
                     {"f1", m.f1},
                     {"auc", m.auc ? Json(*m.auc) : Json(nullptr)}});
  }
  return heads;
}

void TemplateSpec::validate() const {
  if (lexicons.empty()) throw UsageError("template has no labels");
  for (const auto& [name, phrases] : lexicons) {
    if (phrases.empty()) throw UsageError("template lexicon '" + name + "' is empty");
  }
  if (filler.empty()) throw UsageError("template has no filler phrases");
  if (min_filler > max_filler || min_label_phrases > max_label_phrases || max_label_phrases == 0) {
    throw UsageError("template phrase-count bounds are inconsistent");
  }
  if (max_filler == 0) throw UsageError("negatives need at least one filler phrase");
}

TemplateSpec template_from_json(const Json& doc) {
  require_known_keys(doc,
                     {"labels", "filler", "min_filler", "max_filler", "min_label_phrases",
                      "max_label_phrases"},
                     "template");
  TemplateSpec spec;
  try {
    spec.lexicons =
        doc.at("labels").get<std::map<std::string, std::vector<std::string>>>();
    spec.filler = doc.at("filler").get<std::vector<std::string>>();
    spec.min_filler = doc.value("min_filler", spec.min_filler);
    spec.max_filler = doc.value("max_filler", spec.max_filler);
    spec.min_label_phrases = doc.value("min_label_phrases", spec.min_label_phrases);
    spec.max_label_phrases = doc.value("max_label_phrases", spec.max_label_phrases);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("template: ") + e.what());
  }
  return spec;
}

TemplateSpec load_template(const std::filesystem::path& path) {
  try {
    return template_from_json(read_json_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

namespace {

std::size_t draw_between(DeterministicRng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

const std::string& pick(DeterministicRng& rng, const std::vector<std::string>& items) {
  return items[static_cast<std::size_t>(rng.below(items.size()))];
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& part : parts) {
    if (!out.empty()) out += ' ';
    out += part;
  }
  return out;
}

}  // namespace

Corpus generate_synthetic_corpus(const TemplateSpec& spec, std::size_t size, std::uint64_t seed) {
  spec.validate();
  DeterministicRng rng(seed);
  std::vector<std::string> heads;
  for (const auto& [name, phrases] : spec.lexicons) heads.push_back(name);

  const std::size_t positives = size / 2;
  Corpus corpus;
  corpus.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    LabeledExample example;
    for (const auto& head : heads) example.labels[head] = 0;

    std::vector<std::string> parts;
    if (i < positives) {
      const std::string& head = heads[i % heads.size()];
      example.labels[head] = 1;
      const std::size_t filler_count = draw_between(rng, spec.min_filler, spec.max_filler);
      for (std::size_t k = 0; k < filler_count; ++k) parts.push_back(pick(rng, spec.filler));
      const std::size_t phrase_count =
          draw_between(rng, std::max<std::size_t>(1, spec.min_label_phrases), spec.max_label_phrases);
      for (std::size_t k = 0; k < phrase_count; ++k) {
        const auto position = static_cast<std::size_t>(rng.below(parts.size() + 1));
        parts.insert(parts.begin() + static_cast<std::ptrdiff_t>(position),
                     pick(rng, spec.lexicons.at(head)));
      }
    } else {
      const std::size_t filler_count =
          draw_between(rng, std::max<std::size_t>(1, spec.min_filler), spec.max_filler);
      for (std::size_t k = 0; k < filler_count; ++k) parts.push_back(pick(rng, spec.filler));
    }
    example.text = join(parts);
    corpus.push_back(std::move(example));
  }
  rng.shuffle(corpus);
  return corpus;
}

}  // namespace llmguard

#include "llmguard/textprep.h"

#include <algorithm>
#include <map>

#include "llmguard/errors.h"

namespace llmguard {

namespace {

bool is_alnum(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

char to_lower(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}

bool is_valid_token(std::string_view token) {
  return !token.empty() && std::all_of(token.begin(), token.end(), [](unsigned char c) {
    return is_alnum(c) && !(c >= 'A' && c <= 'Z');
  });
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_alnum(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    std::string lowered;
    while (i < text.size() && is_alnum(static_cast<unsigned char>(text[i]))) {
      lowered.push_back(to_lower(static_cast<unsigned char>(text[i])));
      ++i;
    }
    tokens.push_back(Token{lowered, Span{start, i, lowered}});
  }
  return tokens;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!is_valid_token(tokens_[i])) {
      throw UsageError("invalid vocabulary token '" + tokens_[i] + "'");
    }
    if (!index_.emplace(tokens_[i], i).second) {
      throw UsageError("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

std::size_t Vocabulary::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? tokens_.size() : it->second;
}

Vocabulary build_vocabulary(const std::vector<std::string>& corpus, std::size_t max_size,
                            std::size_t min_count) {
  if (max_size < 1 || min_count < 1) {
    throw UsageError("build_vocabulary: max_size and min_count must be >= 1");
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& text : corpus) {
    for (auto& token : tokenize(text)) ++counts[std::move(token.text)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [token, count] : counts) {
    if (count >= min_count) ranked.emplace_back(token, count);
  }
  // counts is already in token order, so a stable sort on frequency keeps
  // the lexicographic tie-break.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_size) ranked.resize(max_size);

  std::vector<std::string> tokens;
  tokens.reserve(ranked.size());
  for (auto& entry : ranked) tokens.push_back(std::move(entry.first));
  return Vocabulary(std::move(tokens));
}

std::vector<double> vectorize(std::string_view text, const Vocabulary& vocab) {
  std::vector<double> counts(vocab.size(), 0.0);
  for (const auto& token : tokenize(text)) {
    std::size_t index = vocab.index_of(token.text);
    if (index < counts.size()) counts[index] += 1.0;
  }
  return counts;
}

}  // namespace llmguard

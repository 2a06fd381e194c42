#pragma once

// Tokenization and count-based vectorization.

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "llmguard/core.h"

namespace llmguard {

struct Token {
  std::string text;  // lowercased
  Span span;         // byte range in the original text; label == text

  bool operator==(const Token&) const = default;
};

// Lowercases ASCII letters and splits on every maximal run of
// non-alphanumeric bytes. Bytes >= 0x80 count as separators, so spans always
// fall on UTF-8 character boundaries.
std::vector<Token> tokenize(std::string_view text);

inline constexpr std::size_t kDefaultMaxVocabulary = 20000;
inline constexpr std::size_t kDefaultMinCount = 2;

class Vocabulary {
 public:
  Vocabulary() = default;
  // Tokens must be unique, nonempty, lowercase alphanumeric; throws UsageError.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  // Returns size() when the token is out of vocabulary.
  std::size_t index_of(std::string_view token) const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Tokens with frequency >= min_count, ranked by (frequency desc, token asc)
// and truncated to max_size.
Vocabulary build_vocabulary(const std::vector<std::string>& corpus,
                            std::size_t max_size = kDefaultMaxVocabulary,
                            std::size_t min_count = kDefaultMinCount);

// Raw term counts of in-vocabulary tokens; out-of-vocabulary tokens dropped.
std::vector<double> vectorize(std::string_view text, const Vocabulary& vocab);

}  // namespace llmguard

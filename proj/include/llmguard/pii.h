#pragma once

// Regular-expression PII scanning. The built-in set and its exact patterns
// are documented in docs/pii-patterns.md.

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "llmguard/config.h"
#include "llmguard/core.h"

namespace llmguard {

struct PiiPattern {
  std::string name;
  std::string regex;  // Perl syntax
  // Post-filters on the digits of a candidate match; 0 disables a bound.
  std::size_t min_digits = 0;
  std::size_t max_digits = 0;
  bool luhn = false;
};

class PiiPatternSet {
 public:
  // Compiles every pattern; throws ConfigError on an invalid expression or a
  // duplicate name.
  explicit PiiPatternSet(std::vector<PiiPattern> patterns);
  ~PiiPatternSet();
  PiiPatternSet(PiiPatternSet&&) noexcept;
  PiiPatternSet& operator=(PiiPatternSet&&) noexcept;

  // email, phone, ipv4, credit_card_like, ssn_like.
  static PiiPatternSet builtin();
  // {"patterns": [{"name", "regex", "min_digits"?, "max_digits"?, "luhn"?}]}
  static PiiPatternSet from_json(const Json& doc);

  const std::vector<PiiPattern>& patterns() const { return patterns_; }

  // Every accepted match of every pattern, before overlap resolution.
  std::vector<Span> candidates(std::string_view text) const;

 private:
  struct Compiled;
  std::vector<PiiPattern> patterns_;
  std::vector<std::unique_ptr<Compiled>> compiled_;
};

// Non-overlapping spans sorted by start. Overlaps are resolved in favour of
// the earlier start, then the longer match, then the smaller pattern name.
std::vector<Span> pii_scan(std::string_view text, const PiiPatternSet& patterns);

// Luhn checksum over the decimal digits of `text` (other bytes ignored).
bool luhn_valid(std::string_view text);

}  // namespace llmguard

#include "llmguard/pii.h"

#include <algorithm>
#include <set>
#include <tuple>

#include <boost/regex.hpp>

#include "llmguard/errors.h"

namespace llmguard {

struct PiiPatternSet::Compiled {
  boost::regex regex;
};

namespace {

std::size_t count_digits(std::string_view text) {
  return static_cast<std::size_t>(
      std::count_if(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; }));
}

bool passes_filters(const PiiPattern& pattern, std::string_view match) {
  if (pattern.min_digits || pattern.max_digits || pattern.luhn) {
    const std::size_t digits = count_digits(match);
    if (pattern.min_digits && digits < pattern.min_digits) return false;
    if (pattern.max_digits && digits > pattern.max_digits) return false;
  }
  return !pattern.luhn || luhn_valid(match);
}

}  // namespace

PiiPatternSet::PiiPatternSet(std::vector<PiiPattern> patterns) : patterns_(std::move(patterns)) {
  std::set<std::string> names;
  for (const auto& pattern : patterns_) {
    if (pattern.name.empty()) throw ConfigError("pii pattern with an empty name");
    if (!names.insert(pattern.name).second) {
      throw ConfigError("duplicate pii pattern name '" + pattern.name + "'");
    }
    try {
      compiled_.push_back(std::make_unique<Compiled>(
          Compiled{boost::regex(pattern.regex, boost::regex::perl)}));
    } catch (const boost::regex_error& e) {
      throw ConfigError("pii pattern '" + pattern.name + "': " + e.what());
    }
  }
}

PiiPatternSet::~PiiPatternSet() = default;
PiiPatternSet::PiiPatternSet(PiiPatternSet&&) noexcept = default;
PiiPatternSet& PiiPatternSet::operator=(PiiPatternSet&&) noexcept = default;

PiiPatternSet PiiPatternSet::builtin() {
  constexpr const char* kOctet = "(?:25[0-5]|2[0-4][0-9]|1[0-9]{2}|[1-9]?[0-9])";
  const std::string ipv4 = std::string("(?<![0-9.])(?:") + kOctet + "\\.){3}" + kOctet +
                           "(?!\\.?[0-9])";
  return PiiPatternSet({
      {"credit_card_like", R"((?<!\w)[0-9](?:[ -]?[0-9]){12,18}(?!\w))", 13, 19, true},
      {"email", R"([A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,})"},
      {"ipv4", ipv4},
      {"phone",
       R"((?<![\w+])(?:\+[0-9]{1,3}(?:[ .-]?[0-9]{1,4}){2,5})"
       R"(|[0-9]{3}[ .-]?[0-9]{3}[ .-]?[0-9]{4}|[0-9]{3}[ .-][0-9]{4})(?!\w))",
       7, 15, false},
      {"ssn_like", R"((?<!\d)\d{3}-\d{2}-\d{4}(?!\d))"},
  });
}

PiiPatternSet PiiPatternSet::from_json(const Json& doc) {
  require_known_keys(doc, {"patterns"}, "pii patterns");
  if (!doc.contains("patterns") || !doc["patterns"].is_array()) {
    throw ConfigError("pii patterns: expected a 'patterns' array");
  }
  std::vector<PiiPattern> patterns;
  for (const auto& item : doc["patterns"]) {
    require_known_keys(item, {"name", "regex", "min_digits", "max_digits", "luhn"},
                       "pii pattern");
    PiiPattern pattern;
    try {
      pattern.name = item.at("name").get<std::string>();
      pattern.regex = item.at("regex").get<std::string>();
      pattern.min_digits = item.value("min_digits", std::size_t{0});
      pattern.max_digits = item.value("max_digits", std::size_t{0});
      pattern.luhn = item.value("luhn", false);
    } catch (const Json::exception& e) {
      throw ConfigError(std::string("pii pattern: ") + e.what());
    }
    patterns.push_back(std::move(pattern));
  }
  return PiiPatternSet(std::move(patterns));
}

std::vector<Span> PiiPatternSet::candidates(std::string_view text) const {
  std::vector<Span> found;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  for (std::size_t p = 0; p < patterns_.size(); ++p) {
    boost::cregex_iterator it(begin, end, compiled_[p]->regex);
    for (; it != boost::cregex_iterator(); ++it) {
      const auto& match = (*it)[0];
      if (match.length() == 0) continue;
      const auto start = static_cast<std::size_t>(match.first - begin);
      const auto stop = static_cast<std::size_t>(match.second - begin);
      if (!passes_filters(patterns_[p], text.substr(start, stop - start))) continue;
      found.push_back(Span{start, stop, patterns_[p].name});
    }
  }
  return found;
}

std::vector<Span> pii_scan(std::string_view text, const PiiPatternSet& patterns) {
  std::vector<Span> candidates = patterns.candidates(text);
  std::sort(candidates.begin(), candidates.end(), [](const Span& a, const Span& b) {
    return std::make_tuple(a.start, b.length(), std::string_view(a.label)) <
           std::make_tuple(b.start, a.length(), std::string_view(b.label));
  });
  std::vector<Span> accepted;
  for (auto& span : candidates) {
    if (!accepted.empty() && span.start < accepted.back().end) continue;
    accepted.push_back(std::move(span));
  }
  return accepted;
}

bool luhn_valid(std::string_view text) {
  int sum = 0;
  bool double_it = false;
  std::size_t digits = 0;
  for (auto it = text.rbegin(); it != text.rend(); ++it) {
    if (*it < '0' || *it > '9') continue;
    int n = *it - '0';
    if (double_it) {
      n *= 2;
      if (n > 9) n -= 9;
    }
    sum += n;
    double_it = !double_it;
    ++digits;
  }
  return digits > 0 && sum % 10 == 0;
}

}  // namespace llmguard

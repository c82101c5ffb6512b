#include "emal/similarity.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_set>

namespace emal {
namespace {

constexpr std::array<std::string_view, kSimilarityCount> kNames = {
    "ExactMatch",      "Levenshtein",     "Jaro",           "JaroWinkler",
    "SmithWaterman",   "NeedlemanWunsch", "LongestCommonSubstring",
    "PrefixSim",       "SuffixSim",       "JaccardSim",     "DiceSim",
    "OverlapCoefficient", "CosineSim",    "BigramJaccard",  "TrigramJaccard",
    "BigramDice",      "TrigramCosine",   "MongeElkan",     "TokenContainment",
    "NumericSim",      "SoundexMatch",
};

bool is_token_char(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

std::string normalize(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out(s.substr(b, e - b));
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

using TokenSet = std::unordered_set<std::string>;

TokenSet token_set(std::string_view s) {
  auto toks = tokenize(s);
  return TokenSet(toks.begin(), toks.end());
}

TokenSet qgram_set(std::string_view s, std::size_t q) {
  TokenSet out;
  if (s.empty()) return out;
  if (s.size() < q) {
    out.emplace(s);
    return out;
  }
  for (std::size_t i = 0; i + q <= s.size(); ++i) out.emplace(s.substr(i, q));
  return out;
}

std::size_t intersection_size(const TokenSet& a, const TokenSet& b) {
  const TokenSet& small = a.size() <= b.size() ? a : b;
  const TokenSet& large = a.size() <= b.size() ? b : a;
  std::size_t n = 0;
  for (const auto& t : small) n += large.count(t);
  return n;
}

enum class SetMeasure { jaccard, dice, overlap, cosine, containment };

double set_similarity(const TokenSet& a, const TokenSet& b, SetMeasure m) {
  if (a.empty() || b.empty()) return 0.0;
  const double inter = static_cast<double>(intersection_size(a, b));
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  switch (m) {
    case SetMeasure::jaccard: return inter / (na + nb - inter);
    case SetMeasure::dice: return 2.0 * inter / (na + nb);
    case SetMeasure::overlap: return inter / std::min(na, nb);
    case SetMeasure::cosine: return inter / std::sqrt(na * nb);
    case SetMeasure::containment: return inter / na;
  }
  return 0.0;
}

double smith_waterman(std::string_view a, std::string_view b) {
  // match +1, mismatch -2, linear gap -0.5; normalized by the best possible
  // score of the shorter string.
  if (a.empty() || b.empty()) return 0.0;
  std::vector<double> prev(b.size() + 1, 0.0), cur(b.size() + 1, 0.0);
  double best = 0.0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = 0.0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const double sub = a[i - 1] == b[j - 1] ? 1.0 : -2.0;
      double v = std::max({0.0, prev[j - 1] + sub, prev[j] - 0.5, cur[j - 1] - 0.5});
      cur[j] = v;
      best = std::max(best, v);
    }
    std::swap(prev, cur);
  }
  return std::clamp(best / static_cast<double>(std::min(a.size(), b.size())), 0.0, 1.0);
}

double needleman_wunsch(std::string_view a, std::string_view b) {
  // Global alignment cost: mismatch 1, gap 2. Cost never exceeds 2*max(len).
  const std::size_t n = a.size(), m = b.size();
  if (n == 0 && m == 0) return 1.0;
  std::vector<double> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = 2.0 * static_cast<double>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = 2.0 * static_cast<double>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      const double sub = a[i - 1] == b[j - 1] ? 0.0 : 1.0;
      cur[j] = std::min({prev[j - 1] + sub, prev[j] + 2.0, cur[j - 1] + 2.0});
    }
    std::swap(prev, cur);
  }
  const double worst = 2.0 * static_cast<double>(std::max(n, m));
  return std::clamp(1.0 - prev[m] / worst, 0.0, 1.0);
}

double longest_common_substring(std::string_view a, std::string_view b) {
  if (a.empty() || b.empty()) return 0.0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  std::size_t best = 0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : 0;
      best = std::max(best, cur[j]);
    }
    std::swap(prev, cur);
  }
  return static_cast<double>(best) / static_cast<double>(std::max(a.size(), b.size()));
}

double prefix_similarity(std::string_view a, std::string_view b) {
  if (a.empty() || b.empty()) return 0.0;
  std::size_t k = 0;
  while (k < a.size() && k < b.size() && a[k] == b[k]) ++k;
  return static_cast<double>(k) / static_cast<double>(std::max(a.size(), b.size()));
}

double suffix_similarity(std::string_view a, std::string_view b) {
  if (a.empty() || b.empty()) return 0.0;
  std::size_t k = 0;
  while (k < a.size() && k < b.size() && a[a.size() - 1 - k] == b[b.size() - 1 - k]) ++k;
  return static_cast<double>(k) / static_cast<double>(std::max(a.size(), b.size()));
}

double monge_elkan(std::string_view a, std::string_view b) {
  const auto ta = tokenize(a);
  const auto tb = tokenize(b);
  if (ta.empty() || tb.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& x : ta) {
    double best = 0.0;
    for (const auto& y : tb) best = std::max(best, sim::jaro_winkler(x, y));
    sum += best;
  }
  return sum / static_cast<double>(ta.size());
}

std::optional<double> parse_number(std::string_view s) {
  std::string cleaned;
  for (char c : s) {
    if (c == '$' || c == ',' || std::isspace(static_cast<unsigned char>(c))) continue;
    cleaned.push_back(c);
  }
  if (cleaned.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cleaned.data(), cleaned.data() + cleaned.size(), v);
  if (ec != std::errc() || ptr != cleaned.data() + cleaned.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

double numeric_similarity(std::string_view a, std::string_view b) {
  auto x = parse_number(a);
  auto y = parse_number(b);
  if (x && y) {
    const double scale = std::max(std::fabs(*x), std::fabs(*y));
    if (scale == 0.0) return 1.0;
    return std::clamp(1.0 - std::fabs(*x - *y) / scale, 0.0, 1.0);
  }
  return set_similarity(token_set(a), token_set(b), SetMeasure::jaccard);
}

double soundex_match(std::string_view a, std::string_view b) {
  const auto ca = sim::soundex(a);
  const auto cb = sim::soundex(b);
  return (!ca.empty() && ca == cb) ? 1.0 : 0.0;
}

}  // namespace

std::string_view similarity_name(SimilarityFunction f) { return kNames[static_cast<std::size_t>(f)]; }

std::optional<SimilarityFunction> similarity_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return similarity_at(i);
  }
  return std::nullopt;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (is_token_char(c)) {
      cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

namespace sim {

double jaro(std::string_view a, std::string_view b) {
  if (a.empty() || b.empty()) return 0.0;
  const std::size_t window = std::max(a.size(), b.size()) / 2 > 0 ? std::max(a.size(), b.size()) / 2 - 1 : 0;
  std::vector<char> a_match(a.size(), 0), b_match(b.size(), 0);
  std::size_t matches = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::size_t lo = i > window ? i - window : 0;
    const std::size_t hi = std::min(b.size(), i + window + 1);
    for (std::size_t j = lo; j < hi; ++j) {
      if (!b_match[j] && a[i] == b[j]) {
        a_match[i] = b_match[j] = 1;
        ++matches;
        break;
      }
    }
  }
  if (matches == 0) return 0.0;
  std::size_t transpositions = 0;
  for (std::size_t i = 0, k = 0; i < a.size(); ++i) {
    if (!a_match[i]) continue;
    while (!b_match[k]) ++k;
    if (a[i] != b[k]) ++transpositions;
    ++k;
  }
  const double m = static_cast<double>(matches);
  const double t = static_cast<double>(transpositions) / 2.0;
  return (m / static_cast<double>(a.size()) + m / static_cast<double>(b.size()) + (m - t) / m) / 3.0;
}

double jaro_winkler(std::string_view a, std::string_view b) {
  const double j = jaro(a, b);
  std::size_t prefix = 0;
  while (prefix < 4 && prefix < a.size() && prefix < b.size() && a[prefix] == b[prefix]) ++prefix;
  return j + static_cast<double>(prefix) * 0.1 * (1.0 - j);
}

std::size_t levenshtein_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string soundex(std::string_view text) {
  auto code = [](char c) -> char {
    switch (c) {
      case 'b': case 'f': case 'p': case 'v': return '1';
      case 'c': case 'g': case 'j': case 'k': case 'q': case 's': case 'x': case 'z': return '2';
      case 'd': case 't': return '3';
      case 'l': return '4';
      case 'm': case 'n': return '5';
      case 'r': return '6';
      case 'h': case 'w': return 'h';
      default: return '0';  // vowels and y
    }
  };
  std::string out;
  char last = 0;
  for (char raw : text) {
    const auto uc = static_cast<unsigned char>(raw);
    if (!std::isalpha(uc) || uc >= 0x80) continue;
    const char c = static_cast<char>(std::tolower(uc));
    const char d = code(c);
    if (out.empty()) {
      out.push_back(static_cast<char>(std::toupper(uc)));
      last = d;
      continue;
    }
    if (d == 'h') continue;  // h and w do not separate equal codes
    if (d != '0' && d != last) out.push_back(d);
    last = d;
    if (out.size() == 4) break;
  }
  if (out.empty()) return out;
  out.resize(4, '0');
  return out;
}

}  // namespace sim

double similarity(SimilarityFunction f, std::optional<std::string_view> a_in,
                  std::optional<std::string_view> b_in) {
  if (!a_in || !b_in) return 0.0;
  const std::string a = normalize(*a_in);
  const std::string b = normalize(*b_in);
  if (a == b) return 1.0;
  switch (f) {
    case SimilarityFunction::exact_match: return 0.0;
    case SimilarityFunction::levenshtein: {
      const auto longest = std::max(a.size(), b.size());
      return 1.0 - static_cast<double>(sim::levenshtein_distance(a, b)) / static_cast<double>(longest);
    }
    case SimilarityFunction::jaro: return sim::jaro(a, b);
    case SimilarityFunction::jaro_winkler: return sim::jaro_winkler(a, b);
    case SimilarityFunction::smith_waterman: return smith_waterman(a, b);
    case SimilarityFunction::needleman_wunsch: return needleman_wunsch(a, b);
    case SimilarityFunction::longest_common_substring: return longest_common_substring(a, b);
    case SimilarityFunction::prefix: return prefix_similarity(a, b);
    case SimilarityFunction::suffix: return suffix_similarity(a, b);
    case SimilarityFunction::token_jaccard:
      return set_similarity(token_set(a), token_set(b), SetMeasure::jaccard);
    case SimilarityFunction::token_dice:
      return set_similarity(token_set(a), token_set(b), SetMeasure::dice);
    case SimilarityFunction::token_overlap:
      return set_similarity(token_set(a), token_set(b), SetMeasure::overlap);
    case SimilarityFunction::token_cosine:
      return set_similarity(token_set(a), token_set(b), SetMeasure::cosine);
    case SimilarityFunction::bigram_jaccard:
      return set_similarity(qgram_set(a, 2), qgram_set(b, 2), SetMeasure::jaccard);
    case SimilarityFunction::trigram_jaccard:
      return set_similarity(qgram_set(a, 3), qgram_set(b, 3), SetMeasure::jaccard);
    case SimilarityFunction::bigram_dice:
      return set_similarity(qgram_set(a, 2), qgram_set(b, 2), SetMeasure::dice);
    case SimilarityFunction::trigram_cosine:
      return set_similarity(qgram_set(a, 3), qgram_set(b, 3), SetMeasure::cosine);
    case SimilarityFunction::monge_elkan: return std::clamp(monge_elkan(a, b), 0.0, 1.0);
    case SimilarityFunction::token_containment:
      return set_similarity(token_set(a), token_set(b), SetMeasure::containment);
    case SimilarityFunction::numeric: return numeric_similarity(a, b);
    case SimilarityFunction::soundex_match: return soundex_match(a, b);
  }
  return 0.0;
}

}  // namespace emal

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace emal {

/// The fixed set of string similarity functions used to build feature vectors.
/// Order is part of the feature layout; do not reorder.
enum class SimilarityFunction : std::uint8_t {
  exact_match,
  levenshtein,
  jaro,
  jaro_winkler,
  smith_waterman,
  needleman_wunsch,
  longest_common_substring,
  prefix,
  suffix,
  token_jaccard,
  token_dice,
  token_overlap,
  token_cosine,
  bigram_jaccard,
  trigram_jaccard,
  bigram_dice,
  trigram_cosine,
  monge_elkan,
  token_containment,
  numeric,
  soundex_match,
};

inline constexpr std::size_t kSimilarityCount = 21;

std::string_view similarity_name(SimilarityFunction f);
std::optional<SimilarityFunction> similarity_from_name(std::string_view name);
inline SimilarityFunction similarity_at(std::size_t i) { return static_cast<SimilarityFunction>(i); }

/// Similarity in [0,1]. A null on either side scores 0. Inputs are compared
/// after ASCII lowercasing and trimming; equal normalized strings score 1.
double similarity(SimilarityFunction f, std::optional<std::string_view> a,
                  std::optional<std::string_view> b);

/// Lowercase, split on runs of non-alphanumeric ASCII, drop empties. Bytes
/// >= 0x80 are kept inside tokens so UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view text);

namespace sim {

double jaro(std::string_view a, std::string_view b);
double jaro_winkler(std::string_view a, std::string_view b);
std::size_t levenshtein_distance(std::string_view a, std::string_view b);
std::string soundex(std::string_view text);

}  // namespace sim
}  // namespace emal

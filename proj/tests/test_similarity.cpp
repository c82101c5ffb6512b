#include <doctest.h>

#include <cmath>
#include <optional>
#include <string>

#include "emal/rng.hpp"
#include "emal/similarity.hpp"

using namespace emal;

namespace {
// Reference values below were produced by the jellyfish package, which
// implements Jaro, Jaro-Winkler, Levenshtein and Soundex independently.
struct Ref {
  const char* a;
  const char* b;
  double jaro;
  double jaro_winkler;
  std::size_t levenshtein;
};
constexpr Ref kRefs[] = {
    {"MARTHA", "MARHTA", 0.9444444444444445, 0.9611111111111111, 2},
    {"DIXON", "DICKSONX", 0.7666666666666666, 0.8133333333333332, 4},
    {"DWAYNE", "DUANE", 0.8222222222222223, 0.8400000000000001, 2},
    {"abc", "xyz", 0.0, 0.0, 3},
    {"crate", "trace", 0.7333333333333334, 0.7333333333333334, 2},
};

std::string random_string(Rng& rng) {
  static const std::string alphabet = "abcAB 12-.,$\xc3\xa9\xe6\x97\xa5";
  std::string s;
  const std::size_t n = rng.below(12);
  for (std::size_t i = 0; i < n; ++i) s.push_back(alphabet[rng.below(alphabet.size())]);
  return s;
}
}  // namespace

TEST_CASE("jaro and jaro-winkler match the reference implementation") {
  for (const auto& r : kRefs) {
    CAPTURE(r.a);
    CAPTURE(r.b);
    CHECK(sim::jaro(r.a, r.b) == doctest::Approx(r.jaro).epsilon(1e-12));
    CHECK(sim::jaro_winkler(r.a, r.b) == doctest::Approx(r.jaro_winkler).epsilon(1e-12));
    CHECK(sim::levenshtein_distance(r.a, r.b) == r.levenshtein);
  }
  CHECK(std::round(similarity(SimilarityFunction::jaro_winkler, "MARTHA", "MARHTA") * 1000) / 1000 == 0.961);
}

TEST_CASE("soundex codes") {
  CHECK(sim::soundex("Robert") == "R163");
  CHECK(sim::soundex("Rupert") == "R163");
  CHECK(sim::soundex("Ashcraft") == "A261");
  CHECK(sim::soundex("Tymczak") == "T522");
  CHECK(sim::soundex("Pfister") == "P236");
  CHECK(sim::soundex("DICKSONX") == "D252");
  CHECK(similarity(SimilarityFunction::soundex_match, "Robert", "Rupert") == 1.0);
  CHECK(similarity(SimilarityFunction::soundex_match, "Robert", "Rubin") == 0.0);
}

TEST_CASE("token functions") {
  CHECK(similarity(SimilarityFunction::token_jaccard, "red apple", "apple red") == 1.0);
  CHECK(similarity(SimilarityFunction::token_jaccard, "a b c", "b c d") == doctest::Approx(0.5));
  CHECK(similarity(SimilarityFunction::token_dice, "a b c", "b c d") == doctest::Approx(2.0 / 3.0));
  CHECK(similarity(SimilarityFunction::token_overlap, "a b", "a b c d") == 1.0);
  CHECK(similarity(SimilarityFunction::token_cosine, "a b", "a c") == doctest::Approx(0.5));
  CHECK(similarity(SimilarityFunction::token_containment, "a b", "a c d") == doctest::Approx(0.5));
  CHECK(similarity(SimilarityFunction::token_jaccard, "--", "..") == 0.0);
}

TEST_CASE("edit-distance family") {
  CHECK(similarity(SimilarityFunction::levenshtein, "kitten", "sitting") == doctest::Approx(1.0 - 3.0 / 7.0));
  CHECK(similarity(SimilarityFunction::prefix, "abcd", "abxy") == doctest::Approx(0.5));
  CHECK(similarity(SimilarityFunction::suffix, "xxcd", "abcd") == doctest::Approx(0.5));
  CHECK(similarity(SimilarityFunction::longest_common_substring, "xabcy", "zabcz") == doctest::Approx(0.6));
  CHECK(similarity(SimilarityFunction::smith_waterman, "abc", "xxabcxx") == doctest::Approx(1.0));
  // one substitution in four characters: cost 1 of at most 8
  CHECK(similarity(SimilarityFunction::needleman_wunsch, "abcd", "abxd") == doctest::Approx(1.0 - 1.0 / 8.0));
}

TEST_CASE("numeric similarity") {
  CHECK(similarity(SimilarityFunction::numeric, "$100", "80") == doctest::Approx(0.8));
  CHECK(similarity(SimilarityFunction::numeric, "1,000", "1000") == 1.0);
  CHECK(similarity(SimilarityFunction::numeric, "0", "-0") == 1.0);
  CHECK(similarity(SimilarityFunction::numeric, "10", "-10") == 0.0);
  CHECK(similarity(SimilarityFunction::numeric, "a b", "b c") == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("nulls score zero for every function") {
  for (std::size_t f = 0; f < kSimilarityCount; ++f) {
    CAPTURE(f);
    CHECK(similarity(similarity_at(f), std::nullopt, "x") == 0.0);
    CHECK(similarity(similarity_at(f), "x", std::nullopt) == 0.0);
    CHECK(similarity(similarity_at(f), std::nullopt, std::nullopt) == 0.0);
  }
}

TEST_CASE("identical values score one for every function") {
  for (std::size_t f = 0; f < kSimilarityCount; ++f) {
    CHECK(similarity(similarity_at(f), "Sony Bravia KDL-40", "sony bravia kdl-40 ") == 1.0);
  }
}

TEST_CASE("range and symmetry on random strings") {
  Rng rng(7);
  const SimilarityFunction symmetric[] = {SimilarityFunction::token_jaccard, SimilarityFunction::jaro,
                                          SimilarityFunction::token_cosine, SimilarityFunction::token_dice,
                                          SimilarityFunction::levenshtein, SimilarityFunction::bigram_jaccard};
  for (int i = 0; i < 3000; ++i) {
    const std::string a = random_string(rng), b = random_string(rng);
    for (std::size_t f = 0; f < kSimilarityCount; ++f) {
      const double v = similarity(similarity_at(f), a, b);
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 1.0);
    }
    for (auto f : symmetric) REQUIRE(similarity(f, a, b) == similarity(f, b, a));
  }
}

TEST_CASE("names round-trip") {
  for (std::size_t f = 0; f < kSimilarityCount; ++f) {
    CHECK(similarity_from_name(similarity_name(similarity_at(f))) == similarity_at(f));
  }
  CHECK(similarity_name(SimilarityFunction::token_jaccard) == "JaccardSim");
  CHECK_FALSE(similarity_from_name("Nope"));
}

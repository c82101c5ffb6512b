#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace emal {

/// Seeded random stream. Draw helpers are implemented here rather than with
/// <random> distributions so sequences are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed), base_(seed) {}

  /// Stream derived from a master seed and a stream name, e.g. ("oracle").
  static Rng stream(std::uint64_t master_seed, std::string_view name);
  /// Child stream for committee member / tree `index`.
  Rng child(std::uint64_t index) const;

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform integer in [0, n). n must be > 0.
  std::size_t below(std::size_t n);
  double normal(double mean = 0.0, double stddev = 1.0);

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[below(i)]);
    }
  }
  template <typename T>
  void shuffle(std::vector<T>& values) {
    shuffle(std::span<T>(values));
  }

  std::uint64_t seed_material() const { return base_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t base_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_name(std::string_view name);
/// Uniform in [0,1) that depends only on (key, index).
double hashed_uniform(std::uint64_t key, std::uint64_t index);

}  // namespace emal

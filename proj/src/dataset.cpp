#include "emal/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "emal/rng.hpp"

namespace emal {

int Dataset::gold_label(PairId id) const {
  const auto& p = pair(id);
  if (!p.gold) throw ValidationError("pair " + std::to_string(id) + " has no gold label");
  return to_int(*p.gold);
}

const CandidatePair& Dataset::pair(PairId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= pairs.size()) {
    throw NotFoundError("unknown pair id " + std::to_string(id));
  }
  return pairs[static_cast<std::size_t>(id)];
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

Dataset load_dataset(const TableDatasetSpec& spec) {
  Dataset d;
  d.name = spec.name;
  auto tables = std::make_shared<TablePair>(load_tables(spec.left, spec.right, spec.alignment));
  d.pairs = block_candidates(*tables, spec.blocking);
  if (spec.gold) d.gold = attach_gold(d.pairs, *tables, *spec.gold);
  d.schema = make_schema(*tables);
  d.atoms = AtomSpace(d.schema.attributes());
  d.features = featurize_all(d.pairs, *tables, spec.blocking.jobs);
  d.checksum = file_digest(spec.left.path) + ":" + file_digest(spec.right.path);
  if (spec.gold) d.checksum += ":" + file_digest(*spec.gold);
  d.tables = std::move(tables);
  return d;
}

Dataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.pairs < 10) throw ValidationError("synthetic data needs at least 10 pairs");
  if (spec.attributes < 1) throw ValidationError("synthetic data needs at least one attribute");
  if (!(spec.skew > 0.0 && spec.skew < 1.0)) throw ValidationError("synthetic skew must be in (0, 1)");
  Rng rng = Rng::stream(spec.seed, "synthetic");

  Dataset d;
  d.name = "synthetic";
  std::vector<std::string> names;
  for (std::size_t a = 0; a < spec.attributes; ++a) names.push_back("attr" + std::to_string(a));
  d.schema = FeatureSchema(names);
  d.atoms = AtomSpace(spec.attributes);
  d.features = FeatureMatrix(spec.pairs, d.schema.dim());

  const auto matches = static_cast<std::size_t>(std::llround(spec.skew * static_cast<double>(spec.pairs)));
  std::vector<int> labels(spec.pairs, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(matches), 1);
  rng.shuffle(labels);

  GoldReport report;
  d.pairs.resize(spec.pairs);
  char buf[32];
  for (std::size_t i = 0; i < spec.pairs; ++i) {
    auto& p = d.pairs[i];
    p.pair_id = static_cast<PairId>(i);
    p.left_row = p.right_row = i;
    std::snprintf(buf, sizeof buf, "L%06zu", i);
    p.left_id = buf;
    std::snprintf(buf, sizeof buf, "R%06zu", i);
    p.right_id = buf;
    p.gold = label_from_int(labels[i]);

    const bool match = labels[i] == 1;
    auto row = d.features.row(i);
    if (!match && rng.uniform() < spec.null_fraction) continue;  // all zeros

    const bool hard = rng.uniform() < (match ? spec.hard_match_fraction : spec.hard_nonmatch_fraction);
    double t;
    if (match) {
      t = hard ? 0.52 + 0.10 * rng.uniform() : 0.75 + 0.25 * rng.uniform();
    } else {
      t = hard ? 0.35 + 0.13 * rng.uniform() : 0.35 * rng.uniform();
    }
    // Attribute similarities scatter around t but average to it, so the
    // label depends on all attributes jointly.
    std::vector<double> dev(spec.attributes);
    for (auto& v : dev) v = spec.attribute_spread * (2.0 * rng.uniform() - 1.0);
    const double mean_dev = std::accumulate(dev.begin(), dev.end(), 0.0) / static_cast<double>(dev.size());
    for (std::size_t a = 0; a < spec.attributes; ++a) {
      const double s = std::clamp(t + dev[a] - mean_dev, 0.0, 1.0);
      for (std::size_t f = 0; f < kSimilarityCount; ++f) {
        const double gamma = 0.6 + 0.05 * static_cast<double>(f);
        double v = std::pow(s, gamma);
        if (rng.uniform() < spec.feature_noise) v = rng.uniform();
        row[a * kSimilarityCount + f] = std::clamp(v, 1e-3, 1.0);
      }
    }
  }
  report.gold_total = report.retained_matches = matches;
  report.pairs = spec.pairs;
  report.skew = static_cast<double>(matches) / static_cast<double>(spec.pairs);
  d.gold = report;
  char digest[64];
  std::snprintf(digest, sizeof digest, "synthetic:%zu:%llu", spec.pairs, static_cast<unsigned long long>(spec.seed));
  d.checksum = digest;
  return d;
}

}  // namespace emal

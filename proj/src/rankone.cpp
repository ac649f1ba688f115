#include "mixlab/rankone.hpp"

#include "mixlab/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace mixlab {

void RankOneSpec::validate() const {
  if (spacers.size() != cuts.size()) throw std::invalid_argument("rank-one spec: one spacer row per stage required");
  for (std::size_t n = 0; n < cuts.size(); ++n) {
    if (cuts[n] < 2) throw std::invalid_argument("rank-one spec: stage " + std::to_string(n) + " has fewer than 2 cuts");
    if (spacers[n].size() != cuts[n])
      throw std::invalid_argument("rank-one spec: stage " + std::to_string(n) + " needs " + std::to_string(cuts[n]) +
                                  " spacer counts");
  }
}

RankOneSpec rank_one_preset(const std::string& name, std::size_t stages) {
  const auto names = rank_one_preset_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw std::invalid_argument("unknown rank-one preset '" + name + "'");
  RankOneSpec spec;
  for (std::size_t n = 0; n < stages; ++n) {
    if (name == "staircase") {
      const auto r = static_cast<std::uint32_t>(n + 2);
      spec.cuts.push_back(r);
      std::vector<std::uint32_t> s(r);
      for (std::uint32_t i = 0; i < r; ++i) s[i] = i;
      spec.spacers.push_back(s);
    } else if (name == "chacon") {
      spec.cuts.push_back(3);
      spec.spacers.push_back({0, 1, 0});
    } else if (name == "odometer") {
      spec.cuts.push_back(2);
      spec.spacers.push_back({0, 0});
    } else {
      spec.cuts.push_back(2);
      spec.spacers.push_back({0, 1});
    }
  }
  return spec;
}

std::vector<std::string> rank_one_preset_names() { return {"staircase", "chacon", "odometer", "one-spacer"}; }

RankOneSpec rank_one_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("cuts") || !j.contains("spacers"))
    throw std::invalid_argument("rank-one spec JSON needs 'cuts' and 'spacers'");
  RankOneSpec spec;
  spec.cuts = j.at("cuts").get<std::vector<std::uint32_t>>();
  spec.spacers = j.at("spacers").get<std::vector<std::vector<std::uint32_t>>>();
  spec.validate();
  return spec;
}

nlohmann::json rank_one_to_json(const RankOneSpec& spec) { return {{"cuts", spec.cuts}, {"spacers", spec.spacers}}; }

std::vector<std::uint64_t> tower_heights(const RankOneSpec& spec) {
  spec.validate();
  constexpr std::uint64_t kLimit = std::uint64_t{1} << 62;
  std::vector<std::uint64_t> h{1};
  for (std::size_t n = 0; n < spec.stages(); ++n) {
    std::uint64_t spacer_sum = 0;
    for (auto s : spec.spacers[n]) spacer_sum += s;
    if (h.back() > (kLimit - spacer_sum) / spec.cuts[n])
      throw std::overflow_error("tower height exceeds 2^62 at stage " + std::to_string(n + 1));
    h.push_back(spec.cuts[n] * h.back() + spacer_sum);
  }
  return h;
}

Rational level_measure(const RankOneSpec& spec, std::size_t stage) {
  const auto h = tower_heights(spec);
  if (stage >= h.size()) throw std::invalid_argument("level_measure: stage beyond the last stage");
  BigInt copies = 1;
  for (std::size_t n = stage; n < spec.stages(); ++n) copies *= spec.cuts[n];
  return Rational(copies, BigInt(h.back()));
}

SymbolicWord generate_word(const RankOneSpec& spec, std::size_t stage, std::size_t length) {
  const auto h = tower_heights(spec);
  if (stage >= h.size()) throw std::invalid_argument("generate_word: stage beyond the last stage");
  if (length < h[stage])
    throw std::invalid_argument("generate_word: length " + std::to_string(length) + " is below h_K = " +
                                std::to_string(h[stage]));
  if (length > h.back())
    throw std::invalid_argument("generate_word: length exceeds the last tower height " + std::to_string(h.back()) +
                                "; add stages");
  SymbolicWord w;
  w.stage = stage;
  w.height = h[stage];
  w.symbols.reserve(length);
  for (std::uint64_t level = 0; level < h[stage]; ++level) w.symbols.push_back(static_cast<std::uint32_t>(level));
  // B_{n+1} starts with B_n, so each stage extends the current prefix in place.
  for (std::size_t n = stage; n < spec.stages() && w.symbols.size() < length; ++n) {
    const std::size_t block = w.symbols.size();
    for (std::uint32_t col = 0; col < spec.cuts[n] && w.symbols.size() < length; ++col) {
      if (col > 0) {
        const std::size_t take = std::min(block, length - w.symbols.size());
        for (std::size_t i = 0; i < take; ++i) w.symbols.push_back(w.symbols[i]);
      }
      const std::size_t spacers = std::min<std::size_t>(spec.spacers[n][col], length - w.symbols.size());
      w.symbols.insert(w.symbols.end(), spacers, SymbolicWord::kSpacer);
    }
  }
  return w;
}

nlohmann::json word_to_rle_json(const SymbolicWord& w) {
  nlohmann::json runs = nlohmann::json::array();
  for (std::size_t i = 0; i < w.symbols.size();) {
    std::size_t j = i;
    while (j < w.symbols.size() && w.symbols[j] == w.symbols[i]) ++j;
    const std::int64_t sym = w.symbols[i] == SymbolicWord::kSpacer ? -1 : static_cast<std::int64_t>(w.symbols[i]);
    runs.push_back({sym, j - i});
    i = j;
  }
  return {{"stage", w.stage}, {"height", w.height}, {"length", w.symbols.size()}, {"runs", runs}};
}

SymbolicWord word_from_rle_json(const nlohmann::json& j) {
  SymbolicWord w;
  w.stage = j.at("stage").get<std::size_t>();
  w.height = j.at("height").get<std::uint64_t>();
  for (const auto& run : j.at("runs")) {
    const auto sym = run.at(0).get<std::int64_t>();
    const auto count = run.at(1).get<std::size_t>();
    if (sym < -1 || sym >= static_cast<std::int64_t>(w.height)) throw std::invalid_argument("RLE word: bad symbol");
    w.symbols.insert(w.symbols.end(), count, sym < 0 ? SymbolicWord::kSpacer : static_cast<std::uint32_t>(sym));
  }
  if (w.symbols.size() != j.at("length").get<std::size_t>()) throw std::invalid_argument("RLE word: length mismatch");
  return w;
}

std::vector<std::uint64_t> level_indicator(const SymbolicWord& w, const LevelSet& a) {
  std::vector<char> member(w.height, 0);
  for (auto l : a.levels)
    if (l < w.height) member[l] = 1;
  // One extra zero word so shifted reads never run past the end.
  std::vector<std::uint64_t> bits(w.size() / 64 + 2, 0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto s = w.symbols[i];
    const bool in = s == SymbolicWord::kSpacer ? a.spacer : member[s] != 0;
    if (in) bits[i >> 6] |= std::uint64_t{1} << (i & 63);
  }
  return bits;
}

namespace {

std::uint64_t read_bits(const std::vector<std::uint64_t>& bits, std::size_t offset) {
  const std::size_t k = offset >> 6, r = offset & 63;
  std::uint64_t lo = k < bits.size() ? bits[k] >> r : 0;
  if (r && k + 1 < bits.size()) lo |= bits[k + 1] << (64 - r);
  return lo;
}

constexpr std::uint64_t kBootstrapSeed = 0x626f6f7473747261ULL;
constexpr int kBootstrapRounds = 200;

}  // namespace

MeasureValue conjunction_frequency(const std::vector<const std::vector<std::uint64_t>*>& indicators,
                                   const std::vector<std::int64_t>& shifts, std::size_t positions, unsigned workers) {
  if (indicators.size() != shifts.size() || indicators.empty())
    throw std::invalid_argument("conjunction_frequency: one shift per indicator required");
  if (positions == 0) throw std::invalid_argument("conjunction_frequency: no positions to count");
  for (auto s : shifts)
    if (s < 0) throw std::invalid_argument("conjunction_frequency: shifts must be >= 0");

  // Blocks of ~sqrt(n) positions, rounded to whole 64-bit words.
  const auto root = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(positions))));
  const std::size_t block_words = std::max<std::size_t>(1, (root + 63) / 64);
  const std::size_t block_len = block_words * 64;
  const std::size_t blocks = (positions + block_len - 1) / block_len;

  std::vector<std::uint64_t> counts(blocks, 0);
  parallel_for(blocks, workers, [&](std::size_t b) {
    const std::size_t begin = b * block_len, end = std::min(positions, begin + block_len);
    std::uint64_t c = 0;
    for (std::size_t pos = begin; pos < end; pos += 64) {
      std::uint64_t acc = ~std::uint64_t{0};
      for (std::size_t j = 0; j < indicators.size() && acc; ++j)
        acc &= read_bits(*indicators[j], pos + static_cast<std::size_t>(shifts[j]));
      if (end - pos < 64) acc &= (std::uint64_t{1} << (end - pos)) - 1;
      c += static_cast<std::uint64_t>(std::popcount(acc));
    }
    counts[b] = c;
  });

  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  const double mean = static_cast<double>(total) / static_cast<double>(positions);

  double se = 0.0;
  if (blocks >= 2) {
    std::mt19937_64 rng(kBootstrapSeed);
    std::uniform_int_distribution<std::size_t> pick(0, blocks - 1);
    auto length_of = [&](std::size_t b) { return std::min(block_len, positions - b * block_len); };
    double sum = 0, sum_sq = 0;
    for (int r = 0; r < kBootstrapRounds; ++r) {
      std::uint64_t hits = 0, len = 0;
      for (std::size_t i = 0; i < blocks; ++i) {
        const std::size_t b = pick(rng);
        hits += counts[b];
        len += length_of(b);
      }
      const double m = static_cast<double>(hits) / static_cast<double>(len);
      sum += m;
      sum_sq += m * m;
    }
    const double avg = sum / kBootstrapRounds;
    se = std::sqrt(std::max(0.0, sum_sq / kBootstrapRounds - avg * avg));
  } else {
    se = std::sqrt(mean * (1.0 - mean) / static_cast<double>(positions));
  }
  return MeasureValue::estimated({mean, se, positions});
}

MeasureValue multi_correlation(const SymbolicWord& w, const std::vector<LevelSet>& sets,
                               const std::vector<std::int64_t>& shifts, unsigned workers) {
  if (sets.size() != shifts.size() || sets.empty())
    throw std::invalid_argument("multi_correlation: one shift per level set required");
  std::int64_t span = 0;
  for (auto s : shifts) {
    if (s < 0) throw std::invalid_argument("multi_correlation: shifts must be >= 0");
    span = std::max(span, s);
  }
  if (static_cast<std::uint64_t>(span) >= w.size())
    throw std::invalid_argument("multi_correlation: shift " + std::to_string(span) + " too large for word length " +
                                std::to_string(w.size()));
  std::vector<std::vector<std::uint64_t>> bits;
  for (const auto& a : sets) bits.push_back(level_indicator(w, a));
  std::vector<const std::vector<std::uint64_t>*> ptrs;
  for (const auto& b : bits) ptrs.push_back(&b);
  return conjunction_frequency(ptrs, shifts, w.size() - static_cast<std::size_t>(span), workers);
}

MeasureValue word_correlation(const SymbolicWord& w, const LevelSet& a, const LevelSet& b, const LevelSet& c,
                              std::int64_t z, std::int64_t wshift, unsigned workers) {
  return multi_correlation(w, {a, b, c}, {0, z, wshift}, workers);
}

MeasureValue pair_correlation(const SymbolicWord& w, const LevelSet& a, const LevelSet& b, std::int64_t z,
                              unsigned workers) {
  return multi_correlation(w, {a, b}, {0, z}, workers);
}

LevelSet full_level_set(const SymbolicWord& w) {
  LevelSet all;
  all.spacer = true;
  for (std::uint64_t l = 0; l < w.height; ++l) all.levels.push_back(static_cast<std::uint32_t>(l));
  return all;
}

std::shared_ptr<const std::vector<std::uint64_t>> WordOracle::indicator(const LevelSet& a) const {
  auto key = std::make_pair(a.levels, a.spacer);
  std::sort(key.first.begin(), key.first.end());
  std::lock_guard lock(mutex_);
  auto& slot = cache_[key];
  if (!slot) slot = std::make_shared<const std::vector<std::uint64_t>>(level_indicator(*word_, a));
  return slot;
}

MeasureValue WordOracle::correlation(const Constellation& c) const {
  std::int64_t lo = std::numeric_limits<std::int64_t>::max(), hi = std::numeric_limits<std::int64_t>::min();
  for (const Site& s : c.shifts) {
    if (s.y != 0) throw CapabilityError("word oracle: shifts must be one-dimensional");
    lo = std::min(lo, s.x);
    hi = std::max(hi, s.x);
  }
  if (static_cast<std::uint64_t>(hi - lo) >= word_->size())
    throw std::invalid_argument("word oracle: shift span too large for word length");
  std::vector<std::shared_ptr<const std::vector<std::uint64_t>>> held;
  std::vector<const std::vector<std::uint64_t>*> ptrs;
  std::vector<std::int64_t> shifts;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto* set = std::get_if<LevelSet>(&c.events[i]);
    if (!set) throw CapabilityError("word oracle needs level-set events");
    held.push_back(indicator(*set));
    ptrs.push_back(held.back().get());
    shifts.push_back(c.shifts[i].x - lo);
  }
  return conjunction_frequency(ptrs, shifts, word_->size() - static_cast<std::size_t>(hi - lo), workers_);
}

}  // namespace mixlab

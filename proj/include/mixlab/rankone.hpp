#pragma once

// Rank-one cutting-and-stacking transformations realized as symbolic words.
// Stage n+1 cuts the stage-n tower into r_n columns, puts s_{n,i} spacers on
// column i and stacks the columns left to right:
//   B_{n+1} = B_n S^{s_{n,0}} B_n S^{s_{n,1}} ... B_n S^{s_{n,r_n - 1}}.

#include "mixlab/correlations.hpp"
#include "mixlab/measure.hpp"

#include "json.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace mixlab {

struct RankOneSpec {
  std::vector<std::uint32_t> cuts;                  // r_n >= 2
  std::vector<std::vector<std::uint32_t>> spacers;  // s_{n,i}, one row of r_n per stage

  std::size_t stages() const { return cuts.size(); }
  /// Throws std::invalid_argument on malformed specs.
  void validate() const;
};

/// Named presets: "staircase" (r_n = n + 2, s_{n,i} = i), "chacon"
/// (r = 3, spacers 0,1,0), "odometer" (r = 2, no spacers) and "one-spacer"
/// (r = 2, spacers 0,1).
RankOneSpec rank_one_preset(const std::string& name, std::size_t stages);
std::vector<std::string> rank_one_preset_names();

RankOneSpec rank_one_from_json(const nlohmann::json& j);
nlohmann::json rank_one_to_json(const RankOneSpec& spec);

/// h_0 = 1, h_{n+1} = r_n h_n + sum_i s_{n,i}; stages() + 1 values.
std::vector<std::uint64_t> tower_heights(const RankOneSpec& spec);

/// Mass of one stage-K level in the stage-M model (M = last stage), with the
/// spacers of later stages counted: prod_{n=K}^{M-1} r_n / h_M.
Rational level_measure(const RankOneSpec& spec, std::size_t stage);

struct SymbolicWord {
  static constexpr std::uint32_t kSpacer = 0xffffffffU;

  std::size_t stage = 0;
  std::uint64_t height = 1;  // h_K: stage-K levels are 0 .. h_K - 1
  std::vector<std::uint32_t> symbols;

  std::size_t size() const { return symbols.size(); }
};

/// Prefix of length n of the limiting tower reading, with symbols recorded
/// as stage-K levels; spacers added after stage K read as kSpacer. Requires
/// h_K <= n <= h_M for the last stage M.
SymbolicWord generate_word(const RankOneSpec& spec, std::size_t stage, std::size_t length);

/// Run-length encoding {stage, height, length, runs: [[symbol, count], ...]}
/// with the spacer written as -1.
nlohmann::json word_to_rle_json(const SymbolicWord& w);
SymbolicWord word_from_rle_json(const nlohmann::json& j);

/// Indicator of a level set along the word, packed 64 positions per word.
std::vector<std::uint64_t> level_indicator(const SymbolicWord& w, const LevelSet& a);

/// Counts positions i in [0, positions) with bit i + shifts[j] set in every
/// indicator j, and turns the per-block counts into a bootstrap estimate.
MeasureValue conjunction_frequency(const std::vector<const std::vector<std::uint64_t>*>& indicators,
                                   const std::vector<std::int64_t>& shifts, std::size_t positions, unsigned workers = 0);

/// Frequency of positions i with word[i + shift_j] in A_j for all j, over the
/// positions where every shifted index lies inside the word. Shifts must be
/// >= 0 and leave at least one position. The standard error comes from a
/// block bootstrap with a fixed seed.
MeasureValue multi_correlation(const SymbolicWord& w, const std::vector<LevelSet>& sets,
                               const std::vector<std::int64_t>& shifts, unsigned workers = 0);

/// Frequency of i with word[i] in A, word[i+z] in B, word[i+w] in C.
MeasureValue word_correlation(const SymbolicWord& w, const LevelSet& a, const LevelSet& b, const LevelSet& c,
                              std::int64_t z, std::int64_t wshift, unsigned workers = 0);
MeasureValue pair_correlation(const SymbolicWord& w, const LevelSet& a, const LevelSet& b, std::int64_t z,
                              unsigned workers = 0);

/// Every symbol of the word: levels 0 .. h_K - 1 plus the spacer.
LevelSet full_level_set(const SymbolicWord& w);

/// Correlation oracle on a symbolic word; events are level sets, shifts are
/// one-dimensional (Site{g, 0}). Negative shifts are handled by translation
/// invariance (all shifts are moved so the smallest is 0).
class WordOracle final : public CorrelationOracle {
 public:
  explicit WordOracle(std::shared_ptr<const SymbolicWord> word, unsigned workers = 0)
      : word_(std::move(word)), workers_(workers) {}
  MeasureValue correlation(const Constellation& c) const override;
  bool exact() const override { return false; }
  std::string name() const override { return "rank-one word"; }
  const SymbolicWord& word() const { return *word_; }

 private:
  std::shared_ptr<const std::vector<std::uint64_t>> indicator(const LevelSet& a) const;

  std::shared_ptr<const SymbolicWord> word_;
  unsigned workers_;
  mutable std::mutex mutex_;
  mutable std::map<std::pair<std::vector<std::uint32_t>, bool>, std::shared_ptr<const std::vector<std::uint64_t>>>
      cache_;
};

}  // namespace mixlab

#pragma once

// Algebraic Z^2-systems over GF(2): the group H of configurations whose
// pattern-sum vanishes at every site (Ledrappier's harmonic configurations
// for the default 5-point pattern), exact Haar cylinder measures, finite
// torus models, Bernoulli baselines and the homoclinic decay check.

#include "mixlab/gf2.hpp"
#include "mixlab/measure.hpp"
#include "mixlab/rational.hpp"

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace mixlab {

struct Site {
  std::int64_t x = 0;
  std::int64_t y = 0;

  friend Site operator+(Site a, Site b) { return {a.x + b.x, a.y + b.y}; }
  friend Site operator-(Site a, Site b) { return {a.x - b.x, a.y - b.y}; }
  friend bool operator==(const Site&, const Site&) = default;
  /// Row-major order: by y, then x.
  friend std::strong_ordering operator<=>(const Site& a, const Site& b) {
    if (auto c = a.y <=> b.y; c != 0) return c;
    return a.x <=> b.x;
  }
};

struct SiteHash {
  std::size_t operator()(const Site& s) const noexcept {
    return std::hash<std::uint64_t>{}(static_cast<std::uint64_t>(s.x) * 0x9e3779b97f4a7c15ULL ^
                                      static_cast<std::uint64_t>(s.y));
  }
};

struct SiteBit {
  Site site;
  std::uint8_t bit = 0;
};

/// Finite support of a GF(2) relation on Z^2; every offset has coefficient 1.
class RelationPattern {
 public:
  explicit RelationPattern(std::vector<Site> support);
  /// {(0,0), (1,0), (-1,0), (0,1), (0,-1)}.
  static RelationPattern ledrappier();

  const std::vector<Site>& support() const { return support_; }
  /// Chebyshev radius of the support around the origin.
  std::int64_t radius() const { return radius_; }
  std::int64_t min_x() const { return min_.x; }
  std::int64_t max_x() const { return max_.x; }
  std::int64_t min_y() const { return min_.y; }
  std::int64_t max_y() const { return max_.y; }
  /// The row-major maximal offset; distinct translates have distinct pivots.
  Site pivot() const { return support_.back(); }
  /// True when the top row of the support is a single cell, so each new
  /// row of a configuration is determined by the rows below it.
  bool has_single_top_cell() const;

  friend bool operator==(const RelationPattern&, const RelationPattern&) = default;

 private:
  std::vector<Site> support_;  // sorted row-major, distinct
  Site min_{}, max_{};
  std::int64_t radius_ = 0;
};

struct AlgebraicSystem {
  RelationPattern pattern = RelationPattern::ledrappier();
  /// Maximal number of cells in the dilated window used by the exact method.
  std::int64_t window_cap_cells = 512 * 512;
};

/// The event {x : x_s = b_s for every listed site}. Sites are distinct.
class CylinderConstraint {
 public:
  CylinderConstraint() = default;
  CylinderConstraint(std::vector<Site> sites, std::vector<std::uint8_t> bits);
  /// Single coordinate event {x_site = bit}.
  static CylinderConstraint coordinate(Site site, std::uint8_t bit);
  /// Intersection of a list of (site, bit) requirements; nullopt when two
  /// requirements disagree on a site (the empty event).
  static std::optional<CylinderConstraint> merge(std::span<const SiteBit> requirements);

  const std::vector<Site>& sites() const { return sites_; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::size_t size() const { return sites_.size(); }
  bool empty() const { return sites_.empty(); }

  CylinderConstraint translated(Site by) const;
  std::vector<SiteBit> requirements() const;
  /// Largest coordinate extent (max over x and y of max - min); 0 if empty.
  std::int64_t diameter() const;

 private:
  std::vector<Site> sites_;
  std::vector<std::uint8_t> bits_;
};

enum class MeasureMethod { Auto, Window, Dyadic };

struct CylinderMeasure {
  Dyadic value;
  /// Rank of the coordinate functionals at the sites, restricted to H.
  std::size_t rank = 0;
  /// Basis of the GF(2) relations among the sites (indexed like the sites).
  std::vector<gf2::BitVector> relations;
  MeasureMethod method = MeasureMethod::Window;
  /// log2 of the scale removed by dyadic reduction (0 for the window method).
  unsigned dyadic_shift = 0;
  /// Set when the result relies on the pattern polynomial being squarefree.
  bool assumes_squarefree = false;

  MeasureValue measure() const { return MeasureValue::exact(value.to_rational()); }
};

/// Exact Haar measure of a cylinder in H: 2^-rank when the bits satisfy every
/// relation, 0 otherwise. Throws CapabilityError when the dilated window
/// exceeds the cap and no dyadic reduction brings it under.
CylinderMeasure cylinder_measure(const AlgebraicSystem& sys, const CylinderConstraint& c,
                                 MeasureMethod method = MeasureMethod::Auto);

/// Basis of the relations among the coordinate functionals at `sites` that
/// hold identically on H.
std::vector<gf2::BitVector> relation_space(const AlgebraicSystem& sys, std::span<const Site> sites,
                                           MeasureMethod method = MeasureMethod::Auto);

/// Largest k such that 2^k divides every coordinate difference; nullopt when
/// fewer than two distinct sites are given.
std::optional<unsigned> common_dyadic_valuation(std::span<const Site> sites);

/// Flat 2D bit array, row-major, (x, y) -> cells[y * width + x].
struct Grid {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> cells;

  Grid() = default;
  Grid(std::size_t w, std::size_t h) : width(w), height(h), cells(w * h, 0) {}
  std::uint8_t at(std::size_t x, std::size_t y) const { return cells[y * width + x]; }
  std::uint8_t& at(std::size_t x, std::size_t y) { return cells[y * width + x]; }
  friend bool operator==(const Grid&, const Grid&) = default;
};

/// True when every wrapped translate of the pattern sums to zero on the grid.
bool satisfies_relations(const RelationPattern& pattern, const Grid& grid);

/// Subgroup of the w x h torus configurations satisfying the wrapped relations.
struct TorusKernel {
  std::size_t width = 0;
  std::size_t height = 0;
  RelationPattern pattern = RelationPattern::ledrappier();
  std::vector<gf2::BitVector> basis;  // each of length width * height, row-major

  std::size_t dimension() const { return basis.size(); }
};

TorusKernel torus_kernel(const AlgebraicSystem& sys, std::size_t width, std::size_t height);
/// Kernel by direct nullspace of the wrapped relation matrix (no transfer matrix).
TorusKernel torus_kernel_direct(const AlgebraicSystem& sys, std::size_t width, std::size_t height);

/// The row-to-row transfer matrix on (rows j..j+k-2) -> (rows j+1..j+k-1),
/// where k is the pattern's vertical extent.
gf2::BitMatrix transfer_matrix(const RelationPattern& pattern, std::size_t width);

/// Uniform element of the kernel: a seeded random GF(2) combination of the basis.
Grid sample_configuration(const TorusKernel& kernel, std::uint64_t seed);

/// Smallest torus side of the form 2^k - 1 that is at least 4x the diameter
/// (and at least 15). Odd sides avoid the extra wrapped relations of 2^k.
std::size_t default_torus_side(std::int64_t diameter);

/// Exact measure of the wrapped cylinder under the uniform kernel measure.
Dyadic torus_cylinder_measure(const TorusKernel& kernel, const CylinderConstraint& c);

/// Monte-Carlo estimate over seeded kernel samples. Chunks use independent
/// substreams and are reduced in chunk order, so results do not depend on
/// the worker count.
MeasureValue mc_cylinder_measure(const TorusKernel& kernel, const CylinderConstraint& c,
                                 std::uint64_t samples, std::uint64_t seed, unsigned workers = 0);

/// Full shift on Z_2^Z (or Z^2) with Haar measure: 2^-(distinct sites), or 0
/// when a site is required to take both values.
MeasureValue bernoulli_cylinder_measure(std::span<const SiteBit> requirements);

/// mu(T^-n S T^n B symmetric-difference B) on the Bernoulli shift, where S
/// flips coordinate `flip_site`; the conjugated flip acts on flip_site + n.
MeasureValue homoclinic_decay(const CylinderConstraint& window, std::int64_t flip_site, std::int64_t n);

}  // namespace mixlab

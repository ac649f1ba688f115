#pragma once

// k-fold correlation oracles and the scans built on them: Mix(k) defect
// scans, the dev(h) / Der / Q deviation statistics, triple-correlation
// asymmetry scans and empty-intersection searches.

#include "mixlab/algebraic.hpp"
#include "mixlab/measure.hpp"
#include "mixlab/rational.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mixlab {

/// A union of tower levels (rank-one words) or of points (finite
/// permutations). `spacer` adds the spacer symbol of a rank-one word.
struct LevelSet {
  std::vector<std::uint32_t> levels;
  bool spacer = false;

  bool contains(std::uint32_t level) const;
  friend bool operator==(const LevelSet&, const LevelSet&) = default;
};

using Event = std::variant<CylinderConstraint, LevelSet>;

/// Events A_i placed at group elements g_i; the constellation denotes the
/// intersection of the T^{g_i} A_i. One-dimensional systems use Site{g, 0}.
struct Constellation {
  std::vector<Site> shifts;
  std::vector<Event> events;

  Constellation() = default;
  Constellation(std::vector<Site> shifts, std::vector<Event> events);
  std::size_t size() const { return shifts.size(); }
};

/// A signed real (defects, scaled correlations) with optional exact value.
struct Quantity {
  double value = 0.0;
  double std_error = 0.0;
  std::optional<Rational> exact;

  static Quantity from(const MeasureValue& m);
  static Quantity of_exact(const Rational& r);
  bool is_exact() const { return exact.has_value(); }
  std::string to_string() const;
};

/// GF(2) relations among the sites of a constellation that do not come from
/// relations inside a single event; these are what makes a correlation differ
/// from the product of the event measures.
struct RelationCertificate {
  std::vector<Site> sites;
  std::vector<gf2::BitVector> cross_relations;
  /// Pairs of events that constrain a common site.
  std::vector<std::pair<std::size_t, std::size_t>> shared_sites;

  bool empty() const { return cross_relations.empty() && shared_sites.empty(); }
  std::string to_string() const;
};

class CorrelationOracle {
 public:
  virtual ~CorrelationOracle() = default;

  /// mu of the intersection of the translated events.
  virtual MeasureValue correlation(const Constellation& c) const = 0;
  virtual bool exact() const = 0;
  virtual std::string name() const = 0;
  virtual bool supports_negative_shifts() const { return true; }
  virtual std::optional<RelationCertificate> relation_certificate(const Constellation&) const {
    return std::nullopt;
  }

  MeasureValue measure(const Event& e) const;
};

/// Exact Haar measures on an algebraic system (window or dyadic method).
class AlgebraicOracle final : public CorrelationOracle {
 public:
  explicit AlgebraicOracle(AlgebraicSystem sys = {}, MeasureMethod method = MeasureMethod::Auto)
      : sys_(std::move(sys)), method_(method) {}
  MeasureValue correlation(const Constellation& c) const override;
  bool exact() const override { return true; }
  std::string name() const override { return "algebraic"; }
  std::optional<RelationCertificate> relation_certificate(const Constellation& c) const override;
  const AlgebraicSystem& system() const { return sys_; }

 private:
  AlgebraicSystem sys_;
  MeasureMethod method_;
};

/// Seeded Monte-Carlo estimates on a finite torus model. With side 0 the
/// side is picked per constellation by default_torus_side; kernels are cached.
class MonteCarloOracle final : public CorrelationOracle {
 public:
  MonteCarloOracle(AlgebraicSystem sys, std::uint64_t samples, std::uint64_t seed, std::size_t side = 0,
                   unsigned workers = 0);
  MeasureValue correlation(const Constellation& c) const override;
  bool exact() const override { return false; }
  std::string name() const override { return "monte-carlo"; }

 private:
  std::shared_ptr<const TorusKernel> kernel_for(std::size_t side) const;

  AlgebraicSystem sys_;
  std::uint64_t samples_, seed_;
  std::size_t side_;
  unsigned workers_;
  mutable std::mutex mutex_;
  mutable std::map<std::size_t, std::shared_ptr<const TorusKernel>> kernels_;
};

/// Independent fair bits on every site (Z or Z^2 full shift).
class BernoulliOracle final : public CorrelationOracle {
 public:
  MeasureValue correlation(const Constellation& c) const override;
  bool exact() const override { return true; }
  std::string name() const override { return "bernoulli"; }
};

/// Uniform measure on {0..n-1} with the map x -> perm[x]; events are point
/// sets (LevelSet levels) and T^g A = {x : T^g x in A}.
class FinitePermutationOracle final : public CorrelationOracle {
 public:
  explicit FinitePermutationOracle(std::vector<std::uint32_t> perm);
  MeasureValue correlation(const Constellation& c) const override;
  bool exact() const override { return true; }
  std::string name() const override { return "permutation"; }
  /// perm^g as an index map (negative g uses the inverse).
  std::vector<std::uint32_t> power(std::int64_t g) const;

 private:
  std::vector<std::uint32_t> perm_;
};

/// Oracle defined by a callback; used for constructed test inputs.
class SyntheticOracle final : public CorrelationOracle {
 public:
  using Fn = std::function<MeasureValue(const Constellation&)>;
  explicit SyntheticOracle(Fn fn, bool exact = true, std::string name = "synthetic")
      : fn_(std::move(fn)), exact_(exact), name_(std::move(name)) {}
  MeasureValue correlation(const Constellation& c) const override { return fn_(c); }
  bool exact() const override { return exact_; }
  std::string name() const override { return name_; }

 private:
  Fn fn_;
  bool exact_;
  std::string name_;
};

MeasureValue kfold_correlation(const CorrelationOracle& oracle, const Constellation& c);

/// Product of the single-event measures of the constellation.
Quantity product_of_measures(const CorrelationOracle& oracle, const std::vector<Event>& events);

// ---------------------------------------------------------------- shift families

/// base offsets scaled by 2^n for n in [n_min, n_max].
struct DyadicFamily {
  std::vector<Site> base;
  unsigned n_min = 1;
  unsigned n_max = 20;
};

/// (0, a_1 m, a_2 m, ...) * direction for m = m_start, m_start + m_step, ...
struct ArithmeticFamily {
  std::vector<std::int64_t> multipliers;  // a_1 ... a_k
  std::int64_t m_start = 1;
  std::int64_t m_step = 1;
  Site direction{1, 0};
};

/// Random tuples with all pairwise Chebyshev gaps >= min_gap, diameter at
/// most max_diameter, and (when non_dyadic) no common 2-adic structure.
struct RandomSeparatedFamily {
  std::int64_t min_gap = 8;
  std::int64_t max_diameter = 256;
  bool two_dimensional = true;
  bool non_dyadic = true;
  std::uint64_t seed = 1;
};

using ShiftFamily = std::variant<DyadicFamily, ArithmeticFamily, RandomSeparatedFamily>;

/// Up to `budget` shift tuples of length k + 1, each starting at 0.
std::vector<std::vector<Site>> generate_shifts(const ShiftFamily& family, std::size_t k, std::size_t budget);

/// True when the nonzero shifts share a common factor 2 in every coordinate
/// difference, i.e. the tuple is a dyadic rescaling of a smaller one.
bool is_dyadic_tuple(const std::vector<Site>& shifts);

// ---------------------------------------------------------------- scans

struct DefectRecord {
  std::vector<Site> shifts;
  Quantity correlation;
  Quantity product;
  Quantity defect;
  std::optional<RelationCertificate> certificate;
};

struct MixDefect {
  std::size_t order = 0;
  std::size_t scanned = 0;
  double max_abs_defect = 0.0;
  std::optional<Rational> max_abs_defect_exact;
  Constellation argmax;
  std::vector<DefectRecord> records;
  /// Tuples whose correlation exceeded the smallest event measure (beyond
  /// 4 stderr for estimates); always 0 for a consistent oracle.
  std::size_t monotonicity_violations = 0;
};

struct ScanOptions {
  unsigned workers = 0;
  bool keep_records = true;
  /// Ask the oracle for a relation certificate whenever the defect is nonzero.
  bool certify = true;
};

MixDefect mix_defect_scan(const CorrelationOracle& oracle, std::size_t k, const std::vector<Event>& events,
                          const ShiftFamily& family, std::size_t budget, const ScanOptions& options = {});

struct DevCell {
  std::int64_t z = 0, w = 0;
  Quantity correlation;
  Quantity product;
  Quantity defect;
};

struct DevScan {
  double epsilon = 0.0;
  std::int64_t h = 0;
  std::size_t q_size = 0;
  std::vector<std::pair<std::int64_t, std::int64_t>> der_pairs;
  double dev = 0.0;     // |Der| / h
  double dev_h2 = 0.0;  // |Der| / h^2 (auxiliary normalization)
  std::vector<DevCell> field;  // every (z, w) in Q, row-major
  std::size_t monotonicity_violations = 0;
};

/// Membership in Q(eps, h): |z|, |w|, |z - w| > eps * h.
bool in_q(std::int64_t z, std::int64_t w, double epsilon, std::int64_t h);

/// Scans (z, w) in [0,h]^2 intersected with Q for |mu(A n T^z B n T^w C) - mu(A)mu(B)mu(C)| > eps.
/// Shifts are z * direction and w * direction.
DevScan dev_scan(const CorrelationOracle& oracle, const Event& a, const Event& b, const Event& c, double epsilon,
                 std::int64_t h, Site direction = {1, 0}, unsigned workers = 0);

struct AsymmetryRow {
  std::int64_t m = 0;
  Quantity forward;   // 4 mu(A n T^m A n T^3m A)
  Quantity backward;  // 4 mu(A n T^-m A n T^-3m A)
};

std::vector<AsymmetryRow> asymmetry_scan(const CorrelationOracle& oracle, const Event& a,
                                         const std::vector<std::int64_t>& ms, Site direction = {1, 0});

/// Pairs (m, n) with mu(A n T^m A n T^{m+n} B) <= threshold.
std::vector<std::pair<std::int64_t, std::int64_t>> empty_intersection_search(
    const CorrelationOracle& oracle, const Event& a, const Event& b,
    const std::vector<std::pair<std::int64_t, std::int64_t>>& scan_set, double threshold, Site direction = {1, 0});

// ---------------------------------------------------------------- export

/// CSV with columns z,w,correlation,product,defect. `header_comment` lines are
/// written first, each prefixed with "# ".
void write_dev_csv(std::ostream& out, const std::vector<DevCell>& cells, const std::string& header_comment = {});
void write_defect_csv(std::ostream& out, const MixDefect& scan, const std::string& header_comment = {});
/// Heatmap of |defect| over [0,h]^2; cells outside Q are grey, Der cells outlined.
void write_dev_heatmap_svg(std::ostream& out, const DevScan& scan, const std::string& description = {});

/// Shortest round-trip decimal for a double (locale independent).
std::string format_double(double v);
/// Escapes &, < and > for SVG text.
std::string xml_escape(const std::string& s);

}  // namespace mixlab

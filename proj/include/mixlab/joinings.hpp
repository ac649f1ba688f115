#pragma once

// Joining tensors over a finite partition and the Markov operators they
// induce. Function spaces are cell-indicator spaces with mass-weighted inner
// products (f, g) = sum_a mu_a f(a) g(a); on k-fold products the masses
// multiply. "Mean-zero subspace" means the functions orthogonal to constants.

#include "mixlab/correlations.hpp"
#include "mixlab/rational.hpp"

#include "json.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mixlab {

/// A tensor or operator violates the joining invariants (negativity,
/// normalization, marginals) or an operation's precondition.
class JoiningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Positive cell masses summing to 1.
class Partition {
 public:
  explicit Partition(std::vector<Rational> weights);
  static Partition uniform(std::size_t cells);

  std::size_t cells() const { return weights_.size(); }
  const std::vector<Rational>& weights() const { return weights_; }
  const Rational& operator[](std::size_t a) const { return weights_[a]; }
  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::vector<Rational> weights_;
};

/// Row-major index helpers for d^n arrays.
std::size_t ipow(std::size_t d, std::size_t n);
std::vector<std::size_t> unflatten(std::size_t flat, std::size_t d, std::size_t order);

class JoiningTensor {
 public:
  /// Entries are row-major over d^order cell tuples. The partition weights are
  /// read off axis 0; every other axis must have the same 1-marginal. Exact
  /// tensors are checked exactly, estimated ones within `tolerance`.
  JoiningTensor(std::size_t order, std::size_t cells, std::vector<Rational> entries, bool estimated = false,
                double tolerance = 1e-9);

  static JoiningTensor product(const Partition& p, std::size_t order);
  /// Uniform two-cell tensor: 2^-(order-1) on even-weight strings, 0 on odd.
  static JoiningTensor parity(std::size_t order);

  std::size_t order() const { return order_; }
  std::size_t cells() const { return cells_; }
  const Partition& partition() const { return partition_; }
  const std::vector<Rational>& entries() const { return entries_; }
  const Rational& at(std::span<const std::size_t> index) const;
  bool estimated() const { return estimated_; }
  double tolerance() const { return tolerance_; }

  /// Equality exactly, or within the tolerance when either side is estimated.
  bool matches(const JoiningTensor& other) const;

 private:
  std::size_t order_, cells_;
  std::vector<Rational> entries_;
  bool estimated_;
  double tolerance_;
  Partition partition_;
};

/// Sums out the axes not listed; the kept axes stay in increasing order.
JoiningTensor marginal(const JoiningTensor& t, std::vector<std::size_t> axes);

struct Classification {
  bool is_product = false;
  /// Largest m such that every m-dimensional marginal is product
  /// (equals the order for product tensors).
  std::size_t max_product_marginal = 1;
  std::size_t order = 0;

  /// "trivial" for product tensors, otherwise "M(m,n)".
  std::string label() const;
};

Classification classify(const JoiningTensor& t);

/// P from k-fold cell functions to cell functions, P[a][b] = nu(a, b) / mu_a,
/// so that (1_A, P(1_B1 x ... x 1_Bk)) = nu(A x B1 x ... x Bk).
class MarkovOperator {
 public:
  /// Takes the matrix as given; `positive()` and `stochastic()` report the
  /// Markov properties without enforcing them.
  MarkovOperator(Partition partition, std::size_t source_order, std::vector<Rational> matrix);

  const Partition& partition() const { return partition_; }
  std::size_t cells() const { return partition_.cells(); }
  std::size_t source_order() const { return source_order_; }
  std::size_t columns() const { return ipow(cells(), source_order_); }
  const Rational& at(std::size_t a, std::size_t b) const { return matrix_[a * columns() + b]; }
  const std::vector<Rational>& matrix() const { return matrix_; }

  bool positive() const;
  /// Rows sum to 1 (constants are preserved).
  bool stochastic() const;
  std::vector<Rational> apply(std::span<const Rational> f) const;

 private:
  Partition partition_;
  std::size_t source_order_;
  std::vector<Rational> matrix_;
};

MarkovOperator markov_from_joining(const JoiningTensor& t);

/// (P3(A1 x A2 x A3), A4) = (P2(A1 x A2), P2(A3 x A4)).
MarkovOperator compose_P3(const MarkovOperator& p2);
/// (P5(A1 x ... x A5), A6) = (P3(A1 x A2 x A3), P3(A4 x A5 x A6)).
MarkovOperator compose_P5(const MarkovOperator& p3);

/// Largest deviation from zero of the cell-wise marginal sums of P* g over a
/// basis of mean-zero g; zero iff the adjoint maps mean-zero functions into
/// the mean-zero tensor subspace.
Rational mean_zero_adjoint_defect(const MarkovOperator& p);

/// Operator norm of P restricted to the k-fold mean-zero tensor subspace.
double mean_zero_norm(const MarkovOperator& p);

struct ChainReport {
  double norm_p2 = 0, norm_p3 = 0, norm_p5 = 0;
  /// sqrt(number of cells - 1), the dimension factor of the mean-zero subspace.
  double constant = 0;
  double delta = 0;
  bool p3_bound = false;  // |P3|^2 <= c |P5| + delta
  bool p2_bound = false;  // |P2|^2 <= c |P3| + delta
  bool holds() const { return p3_bound && p2_bound; }
};

ChainReport chain_check(const MarkovOperator& p2, double delta = 1e-9);

struct OrderChange {
  JoiningTensor tensor;
  bool nonnegative = false;
  bool normalized = false;
  Classification classification;
};

/// nu6(A1..A6) = (P3(A1 x A2 x A3), P3(A4 x A5 x A6)).
OrderChange raise_order(const MarkovOperator& p3);
/// nu2(A1, A2, A1', A2') = (P(A1 x A2), P(A1' x A2')) where P maps into
/// p-fold functions via (P(A1 x A2), B1 x ... x Bp) = nu(A1, A2, B1..Bp).
OrderChange lower_order(const JoiningTensor& t);

/// A permutation of a finite set and a labelling of its points by cells.
struct PermutationSystem {
  std::vector<std::uint32_t> perm;
  std::vector<std::uint32_t> cell_of;

  std::size_t cells() const;
  Partition partition() const;
  /// The induced cell map; throws JoiningError when the partition does not
  /// determine T (some cell is split by T).
  std::vector<std::uint32_t> cell_map() const;
};

/// || T P2 - P2 (T x T) || in the mass-weighted operator norm, T acting by
/// Koopman composition on cell functions.
double intertwining_residual(const PermutationSystem& sys, const MarkovOperator& p2);

/// Thrown when the limiting tensor does not stabilize within the family.
class JoiningLimitError : public JoiningError {
 public:
  JoiningLimitError(const std::string& what, std::vector<std::vector<double>> trace)
      : JoiningError(what), trace(std::move(trace)) {}
  /// One row per scanned tuple: the d^n correlations in row-major order.
  std::vector<std::vector<double>> trace;
};

struct LimitOptions {
  /// Consecutive tuples that must give the same tensor.
  std::size_t stable_runs = 3;
  /// Allowed entrywise drift between consecutive estimated tensors.
  double tolerance = 1e-9;
};

/// Tensor of intersection measures mu(T^{g_1} C_{a_1} n ... n T^{g_n} C_{a_n})
/// over all cell combinations, along the family of shift tuples, returned once
/// it stabilizes.
JoiningTensor limit_joining(const CorrelationOracle& oracle, const std::vector<Event>& cells,
                            const std::vector<std::vector<Site>>& family, const LimitOptions& options = {});

nlohmann::json tensor_to_json(const JoiningTensor& t);
/// Parses {order, dims, entries}; entries are "p/q" strings or numbers.
JoiningTensor tensor_from_json(const nlohmann::json& j, double tolerance = 1e-9);
nlohmann::json classification_to_json(const Classification& c);
nlohmann::json chain_to_json(const ChainReport& r);

}  // namespace mixlab

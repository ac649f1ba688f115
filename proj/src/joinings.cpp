#include "mixlab/joinings.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mixlab {

namespace {

std::string index_text(const std::vector<std::size_t>& idx) {
  std::string s = "(";
  for (std::size_t i = 0; i < idx.size(); ++i) s += (i ? "," : "") + std::to_string(idx[i]);
  return s + ")";
}

bool close(const Rational& a, const Rational& b, double tol) {
  if (tol <= 0) return a == b;
  return std::abs(to_double(a - b)) <= tol;
}

Rational product_weight(const Partition& p, const std::vector<std::size_t>& idx) {
  Rational w = 1;
  for (auto a : idx) w *= p[a];
  return w;
}

}  // namespace

std::size_t ipow(std::size_t d, std::size_t n) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < n; ++i) r *= d;
  return r;
}

std::vector<std::size_t> unflatten(std::size_t flat, std::size_t d, std::size_t order) {
  std::vector<std::size_t> idx(order);
  for (std::size_t i = order; i-- > 0;) {
    idx[i] = flat % d;
    flat /= d;
  }
  return idx;
}

// ---------------------------------------------------------------- Partition

Partition::Partition(std::vector<Rational> weights) : weights_(std::move(weights)) {
  if (weights_.size() < 2) throw std::invalid_argument("partition needs at least 2 cells");
  Rational total = 0;
  for (const auto& w : weights_) {
    if (w <= 0) throw JoiningError("partition: cell masses must be positive");
    total += w;
  }
  if (total != 1) throw JoiningError("partition: masses sum to " + to_string(total) + ", not 1");
}

Partition Partition::uniform(std::size_t cells) {
  return Partition(std::vector<Rational>(cells, Rational(1, static_cast<std::int64_t>(cells))));
}

// ---------------------------------------------------------------- JoiningTensor

namespace {

std::vector<Rational> axis_marginal(const std::vector<Rational>& entries, std::size_t d, std::size_t order,
                                    std::size_t axis) {
  std::vector<Rational> m(d, 0);
  const std::size_t stride = ipow(d, order - 1 - axis);
  for (std::size_t f = 0; f < entries.size(); ++f) m[(f / stride) % d] += entries[f];
  return m;
}

// Estimated tensors carry masses that sum to 1 only approximately; renormalize
// the axis-0 marginal so the partition stays a probability vector.
Partition partition_from(const std::vector<Rational>& entries, std::size_t d, std::size_t order, bool estimated) {
  auto w = axis_marginal(entries, d, order, 0);
  if (estimated) {
    Rational total = 0;
    for (const auto& x : w) total += x;
    if (total <= 0) throw JoiningError("tensor has no mass");
    for (auto& x : w) x /= total;
  }
  for (std::size_t a = 0; a < d; ++a)
    if (w[a] <= 0) throw JoiningError("tensor: cell " + std::to_string(a) + " has zero mass (degenerate partition)");
  return Partition(std::move(w));
}

std::vector<Rational> checked_entries(std::size_t order, std::size_t cells, std::vector<Rational> entries) {
  if (order < 1) throw std::invalid_argument("tensor order must be >= 1");
  if (cells < 2) throw std::invalid_argument("tensor needs at least 2 cells per axis");
  if (entries.size() != ipow(cells, order))
    throw std::invalid_argument("tensor: expected " + std::to_string(ipow(cells, order)) + " entries, got " +
                                std::to_string(entries.size()));
  return entries;
}

}  // namespace

JoiningTensor::JoiningTensor(std::size_t order, std::size_t cells, std::vector<Rational> entries, bool estimated,
                             double tolerance)
    : order_(order),
      cells_(cells),
      entries_(checked_entries(order, cells, std::move(entries))),
      estimated_(estimated),
      tolerance_(estimated ? tolerance : 0.0),
      partition_(partition_from(entries_, cells, order, estimated)) {
  Rational total = 0;
  for (std::size_t f = 0; f < entries_.size(); ++f) {
    const Rational& e = entries_[f];
    if (estimated_ ? to_double(e) < -tolerance_ : e < 0)
      throw JoiningError("tensor: negative entry " + to_string(e) + " at " + index_text(unflatten(f, cells_, order_)));
    total += e;
  }
  if (!close(total, 1, tolerance_)) throw JoiningError("tensor: entries sum to " + to_string(total) + ", not 1");
  for (std::size_t axis = 1; axis < order_; ++axis) {
    const auto m = axis_marginal(entries_, cells_, order_, axis);
    for (std::size_t a = 0; a < cells_; ++a)
      if (!close(m[a], partition_[a], tolerance_))
        throw JoiningError("tensor: 1-marginal of axis " + std::to_string(axis) + " differs from the partition weights");
  }
}

JoiningTensor JoiningTensor::product(const Partition& p, std::size_t order) {
  const std::size_t d = p.cells();
  std::vector<Rational> e(ipow(d, order));
  for (std::size_t f = 0; f < e.size(); ++f) e[f] = product_weight(p, unflatten(f, d, order));
  return JoiningTensor(order, d, std::move(e));
}

JoiningTensor JoiningTensor::parity(std::size_t order) {
  if (order < 2) throw std::invalid_argument("parity tensor needs order >= 2");
  std::vector<Rational> e(ipow(2, order));
  const Rational mass = Dyadic::pow2_inv(static_cast<std::uint32_t>(order - 1)).to_rational();
  for (std::size_t f = 0; f < e.size(); ++f) e[f] = std::popcount(f) % 2 == 0 ? mass : Rational(0);
  return JoiningTensor(order, 2, std::move(e));
}

const Rational& JoiningTensor::at(std::span<const std::size_t> index) const {
  if (index.size() != order_) throw std::invalid_argument("tensor index has wrong length");
  std::size_t f = 0;
  for (auto i : index) {
    if (i >= cells_) throw std::out_of_range("tensor index out of range");
    f = f * cells_ + i;
  }
  return entries_[f];
}

bool JoiningTensor::matches(const JoiningTensor& other) const {
  if (order_ != other.order_ || cells_ != other.cells_) return false;
  const double tol = std::max(tolerance_, other.tolerance_);
  for (std::size_t f = 0; f < entries_.size(); ++f)
    if (!close(entries_[f], other.entries_[f], tol)) return false;
  return true;
}

JoiningTensor marginal(const JoiningTensor& t, std::vector<std::size_t> axes) {
  std::sort(axes.begin(), axes.end());
  if (axes.empty() || axes.size() >= t.order()) throw std::invalid_argument("marginal: axes must be a nonempty proper subset");
  if (std::adjacent_find(axes.begin(), axes.end()) != axes.end() || axes.back() >= t.order())
    throw std::invalid_argument("marginal: bad axis list");
  const std::size_t d = t.cells();
  std::vector<Rational> out(ipow(d, axes.size()), 0);
  for (std::size_t f = 0; f < t.entries().size(); ++f) {
    const auto idx = unflatten(f, d, t.order());
    std::size_t g = 0;
    for (auto ax : axes) g = g * d + idx[ax];
    out[g] += t.entries()[f];
  }
  return JoiningTensor(axes.size(), d, std::move(out), t.estimated(), t.tolerance());
}

// ---------------------------------------------------------------- classify

namespace {

bool is_product_tensor(const JoiningTensor& t) {
  for (std::size_t f = 0; f < t.entries().size(); ++f)
    if (!close(t.entries()[f], product_weight(t.partition(), unflatten(f, t.cells(), t.order())), t.tolerance()))
      return false;
  return true;
}

bool all_marginals_product(const JoiningTensor& t, std::size_t m) {
  const std::size_t n = t.order();
  std::vector<char> pick(n, 0);
  std::fill(pick.end() - static_cast<std::ptrdiff_t>(m), pick.end(), 1);
  do {
    std::vector<std::size_t> axes;
    for (std::size_t i = 0; i < n; ++i)
      if (pick[i]) axes.push_back(i);
    if (!is_product_tensor(marginal(t, axes))) return false;
  } while (std::next_permutation(pick.begin(), pick.end()));
  return true;
}

}  // namespace

std::string Classification::label() const {
  if (is_product) return "trivial";
  return "M(" + std::to_string(max_product_marginal) + "," + std::to_string(order) + ")";
}

Classification classify(const JoiningTensor& t) {
  Classification c;
  c.order = t.order();
  c.is_product = is_product_tensor(t);
  if (c.is_product) {
    c.max_product_marginal = t.order();
    return c;
  }
  c.max_product_marginal = 1;
  for (std::size_t m = 2; m < t.order() && all_marginals_product(t, m); ++m) c.max_product_marginal = m;
  return c;
}

// ---------------------------------------------------------------- MarkovOperator

MarkovOperator::MarkovOperator(Partition partition, std::size_t source_order, std::vector<Rational> matrix)
    : partition_(std::move(partition)), source_order_(source_order), matrix_(std::move(matrix)) {
  if (source_order_ < 1) throw std::invalid_argument("Markov operator needs source order >= 1");
  if (matrix_.size() != cells() * columns()) throw std::invalid_argument("Markov operator: matrix has wrong size");
}

bool MarkovOperator::positive() const {
  return std::all_of(matrix_.begin(), matrix_.end(), [](const Rational& r) { return r >= 0; });
}

bool MarkovOperator::stochastic() const {
  for (std::size_t a = 0; a < cells(); ++a) {
    Rational s = 0;
    for (std::size_t b = 0; b < columns(); ++b) s += at(a, b);
    if (s != 1) return false;
  }
  return true;
}

std::vector<Rational> MarkovOperator::apply(std::span<const Rational> f) const {
  if (f.size() != columns()) throw std::invalid_argument("Markov operator: input has wrong size");
  std::vector<Rational> out(cells(), 0);
  for (std::size_t a = 0; a < cells(); ++a)
    for (std::size_t b = 0; b < columns(); ++b)
      if (f[b] != 0) out[a] += at(a, b) * f[b];
  return out;
}

MarkovOperator markov_from_joining(const JoiningTensor& t) {
  if (t.order() < 2) throw std::invalid_argument("markov_from_joining: tensor order must be >= 2");
  const std::size_t d = t.cells();
  const std::size_t cols = ipow(d, t.order() - 1);
  std::vector<Rational> m(d * cols);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < cols; ++b) m[a * cols + b] = t.entries()[a * cols + b] / t.partition()[a];
  return MarkovOperator(t.partition(), t.order() - 1, std::move(m));
}

namespace {

// Q[out; x, y] = (1/mu_out) sum_c mu_c P[c; x] P[c; y, out], where x and y are
// blocks of the source indices of P (|x| = k, |y| = k - 1).
MarkovOperator pair_through(const MarkovOperator& p) {
  const std::size_t d = p.cells(), k = p.source_order();
  const std::size_t cols = p.columns();   // d^k
  const std::size_t tail = cols / d;      // d^(k-1)
  const std::size_t out_cols = cols * tail;  // d^(2k-1)
  std::vector<Rational> m(d * out_cols, 0);
  for (std::size_t out = 0; out < d; ++out)
    for (std::size_t x = 0; x < cols; ++x)
      for (std::size_t y = 0; y < tail; ++y) {
        Rational s = 0;
        for (std::size_t c = 0; c < d; ++c) {
          const Rational& px = p.at(c, x);
          if (px == 0) continue;
          const Rational& py = p.at(c, y * d + out);
          if (py != 0) s += p.partition()[c] * px * py;
        }
        m[out * out_cols + x * tail + y] = s / p.partition()[out];
      }
  return MarkovOperator(p.partition(), 2 * k - 1, std::move(m));
}

}  // namespace

MarkovOperator compose_P3(const MarkovOperator& p2) {
  if (p2.source_order() != 2) throw std::invalid_argument("compose_P3: needs a source-order-2 operator");
  return pair_through(p2);
}

MarkovOperator compose_P5(const MarkovOperator& p3) {
  if (p3.source_order() != 3) throw std::invalid_argument("compose_P5: needs a source-order-3 operator");
  return pair_through(p3);
}

Rational mean_zero_adjoint_defect(const MarkovOperator& p) {
  const std::size_t d = p.cells(), k = p.source_order(), cols = p.columns();
  const Partition& mu = p.partition();
  Rational worst = 0;
  for (std::size_t basis = 0; basis + 1 < d; ++basis) {
    // g = 1_basis - mu_basis, a mean-zero function.
    std::vector<Rational> g(d);
    for (std::size_t a = 0; a < d; ++a) g[a] = (a == basis ? Rational(1) : Rational(0)) - mu[basis];
    // adjoint(b) = sum_a mu_a P[a][b] g(a) / prod mu_b
    std::vector<Rational> adj(cols, 0);
    for (std::size_t b = 0; b < cols; ++b) {
      Rational s = 0;
      for (std::size_t a = 0; a < d; ++a) s += mu[a] * p.at(a, b) * g[a];
      adj[b] = s / product_weight(mu, unflatten(b, d, k));
    }
    // Conditional mean along each axis must vanish.
    for (std::size_t axis = 0; axis < k; ++axis) {
      const std::size_t stride = ipow(d, k - 1 - axis);
      for (std::size_t b = 0; b < cols; ++b) {
        if ((b / stride) % d != 0) continue;
        Rational s = 0;
        for (std::size_t v = 0; v < d; ++v) s += mu[v] * adj[b + v * stride];
        worst = std::max(worst, Rational(abs(s)));
      }
    }
  }
  return worst;
}

namespace {

// Matrix of P in mass-weighted orthonormal coordinates.
Eigen::MatrixXd weighted_matrix(const MarkovOperator& p) {
  const std::size_t d = p.cells(), k = p.source_order(), cols = p.columns();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(cols));
  for (std::size_t b = 0; b < cols; ++b) {
    const double wb = std::sqrt(to_double(product_weight(p.partition(), unflatten(b, d, k))));
    for (std::size_t a = 0; a < d; ++a)
      m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          std::sqrt(to_double(p.partition()[a])) * to_double(p.at(a, b)) / wb;
  }
  return m;
}

double spectral_norm(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd gram = m * m.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

}  // namespace

double mean_zero_norm(const MarkovOperator& p) {
  const std::size_t d = p.cells(), k = p.source_order(), cols = p.columns();
  Eigen::MatrixXd m = weighted_matrix(p);
  Eigen::VectorXd s(static_cast<Eigen::Index>(d));
  for (std::size_t a = 0; a < d; ++a) s(static_cast<Eigen::Index>(a)) = std::sqrt(to_double(p.partition()[a]));
  // Right-multiply by the projection onto the k-fold mean-zero subspace,
  // one axis at a time: x <- x - s (s . x) along each fiber.
  for (std::size_t axis = 0; axis < k; ++axis) {
    const std::size_t stride = ipow(d, k - 1 - axis);
    for (std::size_t b = 0; b < cols; ++b) {
      if ((b / stride) % d != 0) continue;
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        double dot = 0;
        for (std::size_t v = 0; v < d; ++v) dot += s(static_cast<Eigen::Index>(v)) * m(r, static_cast<Eigen::Index>(b + v * stride));
        for (std::size_t v = 0; v < d; ++v) m(r, static_cast<Eigen::Index>(b + v * stride)) -= s(static_cast<Eigen::Index>(v)) * dot;
      }
    }
  }
  return spectral_norm(m);
}

ChainReport chain_check(const MarkovOperator& p2, double delta) {
  if (p2.source_order() != 2) throw std::invalid_argument("chain_check: needs a source-order-2 operator");
  const MarkovOperator p3 = compose_P3(p2);
  const MarkovOperator p5 = compose_P5(p3);
  ChainReport r;
  r.norm_p2 = mean_zero_norm(p2);
  r.norm_p3 = mean_zero_norm(p3);
  r.norm_p5 = mean_zero_norm(p5);
  r.constant = std::sqrt(static_cast<double>(p2.cells() - 1));
  r.delta = delta;
  r.p3_bound = r.norm_p3 * r.norm_p3 <= r.constant * r.norm_p5 + delta;
  r.p2_bound = r.norm_p2 * r.norm_p2 <= r.constant * r.norm_p3 + delta;
  return r;
}

// ---------------------------------------------------------------- order changes

namespace {

OrderChange finish(std::size_t order, std::size_t d, std::vector<Rational> entries, const char* op) {
  for (std::size_t f = 0; f < entries.size(); ++f)
    if (entries[f] < 0)
      throw JoiningError(std::string(op) + ": negative entry " + to_string(entries[f]) + " at " +
                         index_text(unflatten(f, d, order)) + "; the input is not a joining operator");
  Rational total = 0;
  for (const auto& e : entries) total += e;
  if (total != 1)
    throw JoiningError(std::string(op) + ": entries sum to " + to_string(total) +
                       "; the input lacks the required product marginals");
  OrderChange out{JoiningTensor(order, d, std::move(entries)), true, true, {}};
  out.classification = classify(out.tensor);
  return out;
}

}  // namespace

OrderChange raise_order(const MarkovOperator& p3) {
  if (p3.source_order() != 3) throw std::invalid_argument("raise_order: needs a source-order-3 operator");
  const std::size_t d = p3.cells(), cols = p3.columns();
  std::vector<Rational> e(cols * cols, 0);
  for (std::size_t x = 0; x < cols; ++x)
    for (std::size_t y = 0; y < cols; ++y) {
      Rational s = 0;
      for (std::size_t c = 0; c < d; ++c) s += p3.partition()[c] * p3.at(c, x) * p3.at(c, y);
      e[x * cols + y] = s;
    }
  return finish(6, d, std::move(e), "raise_order");
}

OrderChange lower_order(const JoiningTensor& t) {
  if (t.order() < 3) throw std::invalid_argument("lower_order: needs order p + 2 with p >= 1");
  const std::size_t p = t.order() - 2, d = t.cells();
  const Classification cls = classify(t);
  if (cls.max_product_marginal < p + 1)
    throw JoiningError("lower_order: input is " + cls.label() + ", not of class M(" + std::to_string(p + 1) + "," +
                       std::to_string(p + 2) + ")");
  const std::size_t tail = ipow(d, p), pairs = d * d;
  std::vector<Rational> inv_mass(tail);
  for (std::size_t b = 0; b < tail; ++b) inv_mass[b] = 1 / product_weight(t.partition(), unflatten(b, d, p));
  std::vector<Rational> e(pairs * pairs, 0);
  for (std::size_t x = 0; x < pairs; ++x)
    for (std::size_t y = 0; y < pairs; ++y) {
      Rational s = 0;
      for (std::size_t b = 0; b < tail; ++b) {
        const Rational& u = t.entries()[x * tail + b];
        if (u == 0) continue;
        const Rational& v = t.entries()[y * tail + b];
        if (v != 0) s += u * v * inv_mass[b];
      }
      e[x * pairs + y] = s;
    }
  return finish(4, d, std::move(e), "lower_order");
}

// ---------------------------------------------------------------- intertwining

std::size_t PermutationSystem::cells() const {
  if (cell_of.empty()) return 0;
  return *std::max_element(cell_of.begin(), cell_of.end()) + std::size_t{1};
}

Partition PermutationSystem::partition() const {
  std::vector<std::int64_t> count(cells(), 0);
  for (auto c : cell_of) ++count[c];
  std::vector<Rational> w;
  for (auto c : count) w.emplace_back(c, static_cast<std::int64_t>(cell_of.size()));
  return Partition(std::move(w));
}

std::vector<std::uint32_t> PermutationSystem::cell_map() const {
  if (perm.size() != cell_of.size() || perm.empty())
    throw std::invalid_argument("permutation system: perm and cell labels differ in size");
  std::vector<char> seen(perm.size(), 0);
  for (auto p : perm) {
    if (p >= perm.size() || seen[p]) throw std::invalid_argument("permutation system: not a permutation");
    seen[p] = 1;
  }
  constexpr auto kUnset = static_cast<std::uint32_t>(-1);
  std::vector<std::uint32_t> tau(cells(), kUnset);
  for (std::size_t x = 0; x < perm.size(); ++x) {
    auto& t = tau[cell_of[x]];
    if (t == kUnset) t = cell_of[perm[x]];
    else if (t != cell_of[perm[x]])
      throw JoiningError("permutation system: cell " + std::to_string(cell_of[x]) +
                         " is split by T; refine the partition to express T");
  }
  return tau;
}

double intertwining_residual(const PermutationSystem& sys, const MarkovOperator& p2) {
  if (p2.source_order() != 2) throw std::invalid_argument("intertwining_residual: needs a source-order-2 operator");
  const auto tau = sys.cell_map();
  if (!(sys.partition() == p2.partition()))
    throw std::invalid_argument("intertwining_residual: operator masses differ from the system's cell masses");
  const std::size_t d = p2.cells();
  std::vector<std::size_t> inv(d);
  for (std::size_t a = 0; a < d; ++a) inv[tau[a]] = a;

  std::vector<Rational> r(d * d * d);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b)
      for (std::size_t c = 0; c < d; ++c)
        r[a * d * d + b * d + c] = p2.at(tau[a], b * d + c) - p2.at(a, inv[b] * d + inv[c]);
  return spectral_norm(weighted_matrix(MarkovOperator(p2.partition(), 2, std::move(r))));
}

// ---------------------------------------------------------------- limit joining

JoiningTensor limit_joining(const CorrelationOracle& oracle, const std::vector<Event>& cells,
                            const std::vector<std::vector<Site>>& family, const LimitOptions& options) {
  if (cells.size() < 2) throw std::invalid_argument("limit_joining: needs at least 2 cells");
  if (family.empty()) throw std::invalid_argument("limit_joining: empty constellation family");
  const std::size_t d = cells.size(), n = family.front().size();
  if (n < 2) throw std::invalid_argument("limit_joining: order must be >= 2");
  const std::size_t runs = std::max<std::size_t>(options.stable_runs, 1);

  std::vector<std::vector<double>> trace;
  std::vector<Rational> previous;
  bool exact = oracle.exact();
  std::size_t streak = 0;
  for (const auto& shifts : family) {
    if (shifts.size() != n) throw std::invalid_argument("limit_joining: tuples of different lengths");
    std::vector<Rational> e(ipow(d, n));
    std::vector<double> row(e.size());
    for (std::size_t f = 0; f < e.size(); ++f) {
      const auto idx = unflatten(f, d, n);
      std::vector<Event> events;
      for (auto a : idx) events.push_back(cells[a]);
      const MeasureValue v = oracle.correlation(Constellation(shifts, std::move(events)));
      exact = exact && v.is_exact();
      e[f] = v.is_exact() ? *v.exact_value() : from_double(v.value());
      row[f] = v.value();
    }
    trace.push_back(row);
    bool same = !previous.empty();
    for (std::size_t f = 0; same && f < e.size(); ++f) same = close(e[f], previous[f], exact ? 0.0 : options.tolerance);
    streak = same ? streak + 1 : 1;
    previous = std::move(e);
    if (streak >= runs) return JoiningTensor(n, d, previous, !exact, options.tolerance);
  }
  std::ostringstream msg;
  msg << "limit_joining: correlations did not stabilize over " << family.size() << " tuples (needed " << runs
      << " equal in a row)";
  throw JoiningLimitError(msg.str(), std::move(trace));
}

// ---------------------------------------------------------------- JSON

nlohmann::json tensor_to_json(const JoiningTensor& t) {
  nlohmann::json j;
  j["order"] = t.order();
  j["dims"] = std::vector<std::size_t>(t.order(), t.cells());
  std::vector<std::string> entries;
  for (const auto& e : t.entries()) entries.push_back(to_string(e));
  j["entries"] = entries;
  if (t.estimated()) j["estimated"] = true;
  return j;
}

JoiningTensor tensor_from_json(const nlohmann::json& j, double tolerance) {
  if (!j.is_object()) throw std::invalid_argument("tensor JSON: expected an object");
  for (const char* key : {"order", "dims", "entries"})
    if (!j.contains(key)) throw std::invalid_argument(std::string("tensor JSON: missing key '") + key + "'");
  const auto order = j.at("order").get<std::size_t>();
  const auto dims = j.at("dims").get<std::vector<std::size_t>>();
  if (dims.size() != order) throw std::invalid_argument("tensor JSON: dims length differs from order");
  if (std::adjacent_find(dims.begin(), dims.end(), std::not_equal_to<>()) != dims.end())
    throw std::invalid_argument("tensor JSON: all axes must share one partition");
  std::vector<Rational> entries;
  const auto& arr = j.at("entries");
  if (!arr.is_array()) throw std::invalid_argument("tensor JSON: 'entries' must be an array");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& v = arr[i];
    if (v.is_string()) entries.push_back(parse_rational(v.get<std::string>()));
    else if (v.is_number()) entries.push_back(from_double(v.get<double>()));
    else throw std::invalid_argument("tensor JSON: entries[" + std::to_string(i) + "] is not a number");
  }
  const bool estimated = j.value("estimated", false);
  return JoiningTensor(order, dims.empty() ? 0 : dims[0], std::move(entries), estimated, tolerance);
}

nlohmann::json classification_to_json(const Classification& c) {
  return {{"is_product", c.is_product},
          {"max_product_marginal", c.max_product_marginal},
          {"order", c.order},
          {"class", c.label()}};
}

nlohmann::json chain_to_json(const ChainReport& r) {
  return {{"norm_p2", r.norm_p2}, {"norm_p3", r.norm_p3}, {"norm_p5", r.norm_p5}, {"constant", r.constant},
          {"delta", r.delta},     {"p3_bound", r.p3_bound}, {"p2_bound", r.p2_bound}, {"holds", r.holds()}};
}

}  // namespace mixlab

#include "mixlab/correlations.hpp"

#include "mixlab/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace mixlab {

bool LevelSet::contains(std::uint32_t level) const {
  return std::find(levels.begin(), levels.end(), level) != levels.end();
}

Constellation::Constellation(std::vector<Site> s, std::vector<Event> e) : shifts(std::move(s)), events(std::move(e)) {
  if (shifts.size() != events.size()) throw std::invalid_argument("constellation: shifts and events differ in length");
  if (shifts.empty()) throw std::invalid_argument("constellation: no events");
}

Quantity Quantity::from(const MeasureValue& m) {
  Quantity q;
  q.value = m.value();
  q.std_error = m.std_error();
  if (m.is_exact()) q.exact = *m.exact_value();
  return q;
}

Quantity Quantity::of_exact(const Rational& r) {
  Quantity q;
  q.value = to_double(r);
  q.exact = r;
  return q;
}

std::string Quantity::to_string() const {
  if (exact) return mixlab::to_string(*exact);
  return format_double(value) + " +- " + format_double(std_error);
}

std::string RelationCertificate::to_string() const {
  std::ostringstream os;
  for (std::size_t r = 0; r < cross_relations.size(); ++r) {
    if (r) os << "; ";
    bool first = true;
    for (std::size_t i = 0; i < sites.size(); ++i)
      if (cross_relations[r].get(i)) {
        os << (first ? "" : "+") << "x(" << sites[i].x << "," << sites[i].y << ")";
        first = false;
      }
    os << "=0";
  }
  for (auto [a, b] : shared_sites) {
    if (os.tellp() > 0) os << "; ";
    os << "events " << a << "," << b << " share a site";
  }
  return os.str();
}

MeasureValue CorrelationOracle::measure(const Event& e) const { return correlation(Constellation({{0, 0}}, {e})); }

namespace {

const CylinderConstraint& as_cylinder(const Event& e, const std::string& oracle) {
  if (const auto* c = std::get_if<CylinderConstraint>(&e)) return *c;
  throw CapabilityError(oracle + " oracle needs cylinder events");
}

const LevelSet& as_levels(const Event& e, const std::string& oracle) {
  if (const auto* l = std::get_if<LevelSet>(&e)) return *l;
  throw CapabilityError(oracle + " oracle needs level-set events");
}

std::vector<SiteBit> translated_requirements(const Constellation& c, const std::string& oracle) {
  std::vector<SiteBit> out;
  for (std::size_t i = 0; i < c.size(); ++i)
    for (const SiteBit& r : as_cylinder(c.events[i], oracle).requirements()) out.push_back({r.site + c.shifts[i], r.bit});
  return out;
}

Quantity difference(const Quantity& a, const Quantity& b) {
  if (a.exact && b.exact) return Quantity::of_exact(*a.exact - *b.exact);
  Quantity q;
  q.value = a.value - b.value;
  q.std_error = std::hypot(a.std_error, b.std_error);
  return q;
}

Quantity scaled(const Quantity& a, std::int64_t k) {
  Quantity q = a;
  q.value *= static_cast<double>(k);
  q.std_error *= static_cast<double>(std::llabs(k));
  if (q.exact) *q.exact *= k;
  return q;
}

/// Exceeds the smallest single-event measure (beyond 4 stderr for estimates).
bool violates_monotonicity(const Quantity& corr, const std::vector<Quantity>& singles) {
  for (const Quantity& s : singles) {
    if (corr.exact && s.exact) {
      if (*corr.exact > *s.exact) return true;
    } else if (corr.value > s.value + 4 * (corr.std_error + s.std_error)) {
      return true;
    }
  }
  return false;
}

bool nonzero(const Quantity& q) { return q.exact ? *q.exact != 0 : q.value != 0.0; }

double abs_value(const Quantity& q) { return q.exact ? to_double(abs(*q.exact)) : std::abs(q.value); }

}  // namespace

// ---------------------------------------------------------------- oracles

MeasureValue AlgebraicOracle::correlation(const Constellation& c) const {
  const auto reqs = translated_requirements(c, name());
  const auto merged = CylinderConstraint::merge(reqs);
  if (!merged) return MeasureValue::exact(0);
  return cylinder_measure(sys_, *merged, method_).measure();
}

std::optional<RelationCertificate> AlgebraicOracle::relation_certificate(const Constellation& c) const {
  RelationCertificate cert;
  std::map<Site, std::size_t> owner;
  std::vector<std::vector<Site>> per_event(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (const Site& s : as_cylinder(c.events[i], name()).sites()) {
      const Site t = s + c.shifts[i];
      per_event[i].push_back(t);
      auto [it, inserted] = owner.emplace(t, i);
      if (!inserted && it->second != i) cert.shared_sites.emplace_back(it->second, i);
    }
  }
  for (auto& [s, _] : owner) cert.sites.push_back(s);
  if (cert.sites.empty()) return std::nullopt;

  std::map<Site, std::size_t> index;
  for (std::size_t i = 0; i < cert.sites.size(); ++i) index[cert.sites[i]] = i;
  gf2::Echelon local(cert.sites.size());
  for (const auto& sites : per_event) {
    if (sites.size() < 2) continue;
    for (const auto& rel : relation_space(sys_, sites, method_)) {
      gf2::BitVector v(cert.sites.size());
      for (std::size_t j = 0; j < sites.size(); ++j)
        if (rel.get(j)) v.flip(index.at(sites[j]));
      local.insert(v);
    }
  }
  for (const auto& rel : relation_space(sys_, cert.sites, method_))
    if (local.insert(rel)) cert.cross_relations.push_back(rel);
  if (cert.empty()) return std::nullopt;
  return cert;
}

MonteCarloOracle::MonteCarloOracle(AlgebraicSystem sys, std::uint64_t samples, std::uint64_t seed, std::size_t side,
                                   unsigned workers)
    : sys_(std::move(sys)), samples_(samples), seed_(seed), side_(side), workers_(workers) {
  if (samples_ == 0) throw std::invalid_argument("Monte Carlo oracle needs samples > 0");
}

std::shared_ptr<const TorusKernel> MonteCarloOracle::kernel_for(std::size_t side) const {
  std::lock_guard lock(mutex_);
  auto& slot = kernels_[side];
  if (!slot) slot = std::make_shared<const TorusKernel>(torus_kernel(sys_, side, side));
  return slot;
}

MeasureValue MonteCarloOracle::correlation(const Constellation& c) const {
  const auto reqs = translated_requirements(c, name());
  const auto merged = CylinderConstraint::merge(reqs);
  if (!merged) return MeasureValue::estimated({0.0, 0.0, samples_});
  const std::size_t side = side_ ? side_ : default_torus_side(merged->diameter());
  return mc_cylinder_measure(*kernel_for(side), *merged, samples_, seed_, workers_);
}

MeasureValue BernoulliOracle::correlation(const Constellation& c) const {
  return bernoulli_cylinder_measure(translated_requirements(c, name()));
}

FinitePermutationOracle::FinitePermutationOracle(std::vector<std::uint32_t> perm) : perm_(std::move(perm)) {
  if (perm_.empty()) throw std::invalid_argument("permutation oracle: empty permutation");
  std::vector<char> seen(perm_.size(), 0);
  for (auto p : perm_) {
    if (p >= perm_.size() || seen[p]) throw std::invalid_argument("permutation oracle: not a permutation");
    seen[p] = 1;
  }
}

std::vector<std::uint32_t> FinitePermutationOracle::power(std::int64_t g) const {
  const std::size_t n = perm_.size();
  std::vector<std::uint32_t> step = perm_;
  if (g < 0) {
    for (std::size_t x = 0; x < n; ++x) step[perm_[x]] = static_cast<std::uint32_t>(x);
    g = -g;
  }
  std::vector<std::uint32_t> out(n);
  std::iota(out.begin(), out.end(), 0U);
  for (auto e = static_cast<std::uint64_t>(g); e; e >>= 1) {
    if (e & 1U)
      for (auto& v : out) v = step[v];
    std::vector<std::uint32_t> sq(n);
    for (std::size_t x = 0; x < n; ++x) sq[x] = step[step[x]];
    step = std::move(sq);
  }
  return out;
}

MeasureValue FinitePermutationOracle::correlation(const Constellation& c) const {
  const std::size_t n = perm_.size();
  std::vector<char> alive(n, 1);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.shifts[i].y != 0) throw CapabilityError("permutation oracle: shifts must be one-dimensional");
    const LevelSet& a = as_levels(c.events[i], name());
    std::vector<char> in_a(n, 0);
    for (auto p : a.levels) {
      if (p >= n) throw std::invalid_argument("permutation oracle: point out of range");
      in_a[p] = 1;
    }
    const auto pw = power(c.shifts[i].x);
    for (std::size_t x = 0; x < n; ++x) alive[x] &= in_a[pw[x]];
  }
  const auto hits = std::count(alive.begin(), alive.end(), 1);
  return MeasureValue::exact(Rational(hits, static_cast<std::int64_t>(n)));
}

MeasureValue kfold_correlation(const CorrelationOracle& oracle, const Constellation& c) {
  return oracle.correlation(c);
}

Quantity product_of_measures(const CorrelationOracle& oracle, const std::vector<Event>& events) {
  std::vector<Quantity> singles;
  for (const Event& e : events) singles.push_back(Quantity::from(oracle.measure(e)));
  const bool all_exact = std::all_of(singles.begin(), singles.end(), [](const Quantity& q) { return q.is_exact(); });
  if (all_exact) {
    Rational p = 1;
    for (const auto& q : singles) p *= *q.exact;
    return Quantity::of_exact(p);
  }
  Quantity out;
  out.value = 1.0;
  for (const auto& q : singles) out.value *= q.value;
  double var = 0.0;
  for (std::size_t i = 0; i < singles.size(); ++i) {
    double partial = singles[i].std_error;
    for (std::size_t j = 0; j < singles.size(); ++j)
      if (j != i) partial *= singles[j].value;
    var += partial * partial;
  }
  out.std_error = std::sqrt(var);
  return out;
}

// ---------------------------------------------------------------- shift families

bool is_dyadic_tuple(const std::vector<Site>& shifts) {
  const auto v = common_dyadic_valuation(shifts);
  return v && *v >= 1;
}

namespace {

std::int64_t chebyshev(Site a, Site b) { return std::max(std::llabs(a.x - b.x), std::llabs(a.y - b.y)); }

std::vector<std::vector<Site>> dyadic_tuples(const DyadicFamily& f, std::size_t k, std::size_t budget) {
  if (f.base.size() != k + 1) throw std::invalid_argument("dyadic family: base needs k + 1 offsets");
  if (f.n_max > 40) throw std::invalid_argument("dyadic family: scale exponent too large");
  std::vector<std::vector<Site>> out;
  for (unsigned n = f.n_min; n <= f.n_max && out.size() < budget; ++n) {
    const std::int64_t s = std::int64_t{1} << n;
    std::vector<Site> t;
    for (const Site& b : f.base) t.push_back({(b.x - f.base[0].x) * s, (b.y - f.base[0].y) * s});
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<std::vector<Site>> arithmetic_tuples(const ArithmeticFamily& f, std::size_t k, std::size_t budget) {
  if (f.multipliers.size() != k) throw std::invalid_argument("arithmetic family: needs k multipliers");
  std::vector<std::vector<Site>> out;
  for (std::int64_t m = f.m_start; out.size() < budget; m += f.m_step) {
    std::vector<Site> t{{0, 0}};
    for (auto a : f.multipliers) t.push_back({a * m * f.direction.x, a * m * f.direction.y});
    out.push_back(std::move(t));
    if (f.m_step == 0) break;
  }
  return out;
}

std::vector<std::vector<Site>> random_tuples(const RandomSeparatedFamily& f, std::size_t k, std::size_t budget) {
  if (f.min_gap < 1 || f.max_diameter < f.min_gap) throw std::invalid_argument("random family: bad gap/diameter");
  std::mt19937_64 rng(f.seed);
  std::uniform_int_distribution<std::int64_t> coord(0, f.max_diameter);
  std::vector<std::vector<Site>> out;
  const std::size_t max_attempts = std::max<std::size_t>(budget, 1) * 10000;
  for (std::size_t attempt = 0; attempt < max_attempts && out.size() < budget; ++attempt) {
    std::vector<Site> pts;
    for (std::size_t i = 0; i <= k; ++i) pts.push_back({coord(rng), f.two_dimensional ? coord(rng) : 0});
    bool ok = true;
    for (std::size_t i = 0; i < pts.size() && ok; ++i)
      for (std::size_t j = i + 1; j < pts.size() && ok; ++j) ok = chebyshev(pts[i], pts[j]) >= f.min_gap;
    if (!ok || (f.non_dyadic && is_dyadic_tuple(pts))) continue;
    const Site origin = pts[0];
    for (Site& p : pts) p = p - origin;
    out.push_back(std::move(pts));
  }
  return out;
}

}  // namespace

std::vector<std::vector<Site>> generate_shifts(const ShiftFamily& family, std::size_t k, std::size_t budget) {
  return std::visit(
      [&](const auto& f) -> std::vector<std::vector<Site>> {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, DyadicFamily>) return dyadic_tuples(f, k, budget);
        else if constexpr (std::is_same_v<F, ArithmeticFamily>) return arithmetic_tuples(f, k, budget);
        else return random_tuples(f, k, budget);
      },
      family);
}

// ---------------------------------------------------------------- scans

MixDefect mix_defect_scan(const CorrelationOracle& oracle, std::size_t k, const std::vector<Event>& events,
                          const ShiftFamily& family, std::size_t budget, const ScanOptions& options) {
  if (k < 1) throw std::invalid_argument("mix_defect_scan: order k must be >= 1");
  if (budget < 1) throw std::invalid_argument("mix_defect_scan: budget must be >= 1");
  if (events.size() != k + 1) throw std::invalid_argument("mix_defect_scan: needs k + 1 events");

  std::vector<Quantity> singles;
  for (const Event& e : events) singles.push_back(Quantity::from(oracle.measure(e)));
  const Quantity product = product_of_measures(oracle, events);
  const auto tuples = generate_shifts(family, k, budget);

  std::vector<DefectRecord> records(tuples.size());
  std::vector<char> violation(tuples.size(), 0);
  parallel_for(tuples.size(), options.workers, [&](std::size_t i) {
    const Constellation c(tuples[i], events);
    DefectRecord& r = records[i];
    r.shifts = tuples[i];
    r.correlation = Quantity::from(oracle.correlation(c));
    r.product = product;
    r.defect = difference(r.correlation, product);
    violation[i] = violates_monotonicity(r.correlation, singles);
    if (options.certify && nonzero(r.defect)) r.certificate = oracle.relation_certificate(c);
  });

  MixDefect out;
  out.order = k;
  out.scanned = tuples.size();
  std::size_t best = tuples.size();
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.monotonicity_violations += violation[i];
    const double a = abs_value(records[i].defect);
    if (best == tuples.size() || a > out.max_abs_defect) {
      best = i;
      out.max_abs_defect = a;
      out.max_abs_defect_exact.reset();
      if (records[i].defect.exact) out.max_abs_defect_exact = abs(*records[i].defect.exact);
    }
  }
  if (best < tuples.size()) out.argmax = Constellation(tuples[best], events);
  if (options.keep_records) out.records = std::move(records);
  return out;
}

bool in_q(std::int64_t z, std::int64_t w, double epsilon, std::int64_t h) {
  const double bound = epsilon * static_cast<double>(h);
  return static_cast<double>(std::llabs(z)) > bound && static_cast<double>(std::llabs(w)) > bound &&
         static_cast<double>(std::llabs(z - w)) > bound;
}

DevScan dev_scan(const CorrelationOracle& oracle, const Event& a, const Event& b, const Event& c, double epsilon,
                 std::int64_t h, Site direction, unsigned workers) {
  if (!(epsilon > 0.0 && epsilon < 1.0 / 3.0)) throw std::invalid_argument("dev_scan: epsilon must lie in (0, 1/3)");
  if (h < 1) throw std::invalid_argument("dev_scan: h must be >= 1");

  const std::vector<Event> events{a, b, c};
  std::vector<Quantity> singles;
  for (const Event& e : events) singles.push_back(Quantity::from(oracle.measure(e)));
  const Quantity product = product_of_measures(oracle, events);
  const Rational eps_exact = from_double(epsilon);

  struct Row {
    std::vector<DevCell> cells;
    std::vector<char> der;
    std::size_t violations = 0;
  };
  std::vector<Row> rows(static_cast<std::size_t>(h) + 1);
  parallel_for(rows.size(), workers, [&](std::size_t zi) {
    const auto z = static_cast<std::int64_t>(zi);
    Row& row = rows[zi];
    for (std::int64_t w = 0; w <= h; ++w) {
      if (!in_q(z, w, epsilon, h)) continue;
      const Constellation con({{0, 0}, {z * direction.x, z * direction.y}, {w * direction.x, w * direction.y}},
                              events);
      DevCell cell{z, w, Quantity::from(oracle.correlation(con)), product, {}};
      cell.defect = difference(cell.correlation, product);
      const bool deviates = cell.defect.exact ? abs(*cell.defect.exact) > eps_exact : std::abs(cell.defect.value) > epsilon;
      row.violations += violates_monotonicity(cell.correlation, singles);
      row.der.push_back(deviates);
      row.cells.push_back(std::move(cell));
    }
  });

  DevScan out;
  out.epsilon = epsilon;
  out.h = h;
  for (Row& row : rows) {
    out.monotonicity_violations += row.violations;
    for (std::size_t i = 0; i < row.cells.size(); ++i) {
      ++out.q_size;
      if (row.der[i]) out.der_pairs.emplace_back(row.cells[i].z, row.cells[i].w);
      out.field.push_back(std::move(row.cells[i]));
    }
  }
  const auto hd = static_cast<double>(h);
  out.dev = static_cast<double>(out.der_pairs.size()) / hd;
  out.dev_h2 = static_cast<double>(out.der_pairs.size()) / (hd * hd);
  return out;
}

std::vector<AsymmetryRow> asymmetry_scan(const CorrelationOracle& oracle, const Event& a,
                                         const std::vector<std::int64_t>& ms, Site direction) {
  if (!oracle.supports_negative_shifts()) throw CapabilityError("asymmetry_scan: oracle lacks negative shifts");
  std::vector<AsymmetryRow> out;
  const std::vector<Event> events{a, a, a};
  for (std::int64_t m : ms) {
    const Site s1{m * direction.x, m * direction.y}, s3{3 * m * direction.x, 3 * m * direction.y};
    AsymmetryRow row;
    row.m = m;
    row.forward = scaled(Quantity::from(oracle.correlation(Constellation({{0, 0}, s1, s3}, events))), 4);
    row.backward = scaled(
        Quantity::from(oracle.correlation(Constellation({{0, 0}, {-s1.x, -s1.y}, {-s3.x, -s3.y}}, events))), 4);
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<std::pair<std::int64_t, std::int64_t>> empty_intersection_search(
    const CorrelationOracle& oracle, const Event& a, const Event& b,
    const std::vector<std::pair<std::int64_t, std::int64_t>>& scan_set, double threshold, Site direction) {
  if (threshold < 0) throw std::invalid_argument("empty_intersection_search: threshold must be >= 0");
  const Rational t_exact = from_double(threshold);
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  for (auto [m, n] : scan_set) {
    const Constellation c({{0, 0}, {m * direction.x, m * direction.y}, {(m + n) * direction.x, (m + n) * direction.y}},
                          {a, a, b});
    const MeasureValue v = oracle.correlation(c);
    const bool hit = v.is_exact() ? *v.exact_value() <= t_exact : v.value() <= threshold;
    if (hit) out.emplace_back(m, n);
  }
  return out;
}

// ---------------------------------------------------------------- export

std::string format_double(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, end);
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += ch;
    }
  }
  return out;
}

namespace {

void write_comment(std::ostream& out, const std::string& text) {
  if (text.empty()) return;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) out << "# " << line << '\n';
}

std::string shifts_text(const std::vector<Site>& shifts) {
  std::string s;
  for (std::size_t i = 0; i < shifts.size(); ++i) {
    if (i) s += ';';
    s += std::to_string(shifts[i].x) + ":" + std::to_string(shifts[i].y);
  }
  return s;
}

}  // namespace

void write_dev_csv(std::ostream& out, const std::vector<DevCell>& cells, const std::string& header_comment) {
  write_comment(out, header_comment);
  out << "z,w,correlation,product,defect\n";
  for (const DevCell& c : cells)
    out << c.z << ',' << c.w << ',' << format_double(c.correlation.value) << ',' << format_double(c.product.value)
        << ',' << format_double(c.defect.value) << '\n';
}

void write_defect_csv(std::ostream& out, const MixDefect& scan, const std::string& header_comment) {
  write_comment(out, header_comment);
  out << "shifts,correlation,product,defect,exact_defect,certificate\n";
  for (const DefectRecord& r : scan.records) {
    out << shifts_text(r.shifts) << ',' << format_double(r.correlation.value) << ',' << format_double(r.product.value)
        << ',' << format_double(r.defect.value) << ',' << (r.defect.exact ? to_string(*r.defect.exact) : "") << ','
        << (r.certificate ? '"' + r.certificate->to_string() + '"' : std::string()) << '\n';
  }
}

void write_dev_heatmap_svg(std::ostream& out, const DevScan& scan, const std::string& description) {
  const std::int64_t n = scan.h + 1;
  const std::int64_t cell = std::max<std::int64_t>(1, 600 / n);
  const std::int64_t size = cell * n;
  double peak = 0.0;
  for (const DevCell& c : scan.field) peak = std::max(peak, std::abs(c.defect.value));

  std::vector<const DevCell*> grid(static_cast<std::size_t>(n * n), nullptr);
  for (const DevCell& c : scan.field) grid[static_cast<std::size_t>(c.w * n + c.z)] = &c;
  std::vector<char> der(grid.size(), 0);
  for (auto [z, w] : scan.der_pairs) der[static_cast<std::size_t>(w * n + z)] = 1;

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\" viewBox=\"0 0 "
      << size << ' ' << size << "\">\n";
  if (!description.empty()) out << "<desc>" << xml_escape(description) << "</desc>\n";
  out << "<title>|defect| over (z, w), eps=" << format_double(scan.epsilon) << " h=" << scan.h << "</title>\n";
  for (std::int64_t w = 0; w < n; ++w)
    for (std::int64_t z = 0; z < n; ++z) {
      const auto idx = static_cast<std::size_t>(w * n + z);
      std::string fill = "#bbbbbb";
      if (grid[idx]) {
        const double t = peak > 0 ? std::abs(grid[idx]->defect.value) / peak : 0.0;
        const int g = static_cast<int>(std::lround(255 * (1.0 - t)));
        char buf[8];
        std::snprintf(buf, sizeof buf, "#ff%02x%02x", g, g);
        fill = buf;
      }
      // y grows upward in w.
      out << "<rect x=\"" << z * cell << "\" y=\"" << (n - 1 - w) * cell << "\" width=\"" << cell << "\" height=\""
          << cell << "\" fill=\"" << fill << '"';
      if (der[idx]) out << " stroke=\"#000000\" stroke-width=\"" << std::max<std::int64_t>(1, cell / 4) << '"';
      out << "/>\n";
    }
  out << "</svg>\n";
}

}  // namespace mixlab

#include "mixlab/algebraic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "mixlab/parallel.hpp"

namespace mixlab {

// ---------------------------------------------------------------------------
// Patterns and constraints

RelationPattern::RelationPattern(std::vector<Site> support) : support_(std::move(support)) {
  if (support_.empty()) throw std::invalid_argument("relation pattern must be nonempty");
  std::sort(support_.begin(), support_.end());
  if (std::adjacent_find(support_.begin(), support_.end()) != support_.end())
    throw std::invalid_argument("relation pattern has a repeated offset");
  min_ = max_ = support_.front();
  for (const Site& s : support_) {
    min_ = {std::min(min_.x, s.x), std::min(min_.y, s.y)};
    max_ = {std::max(max_.x, s.x), std::max(max_.y, s.y)};
    radius_ = std::max({radius_, std::abs(s.x), std::abs(s.y)});
  }
}

RelationPattern RelationPattern::ledrappier() {
  return RelationPattern({{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}});
}

bool RelationPattern::has_single_top_cell() const {
  return std::count_if(support_.begin(), support_.end(), [&](const Site& s) { return s.y == max_.y; }) == 1;
}

CylinderConstraint::CylinderConstraint(std::vector<Site> sites, std::vector<std::uint8_t> bits)
    : sites_(std::move(sites)), bits_(std::move(bits)) {
  if (sites_.size() != bits_.size()) throw std::invalid_argument("cylinder: sites and bits differ in length");
  for (auto b : bits_)
    if (b > 1) throw std::invalid_argument("cylinder: bits must be 0 or 1");
  std::vector<Site> sorted = sites_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("cylinder: sites must be pairwise distinct");
}

CylinderConstraint CylinderConstraint::coordinate(Site site, std::uint8_t bit) {
  return CylinderConstraint({site}, {bit});
}

std::optional<CylinderConstraint> CylinderConstraint::merge(std::span<const SiteBit> requirements) {
  std::vector<SiteBit> sorted(requirements.begin(), requirements.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const SiteBit& a, const SiteBit& b) { return a.site < b.site; });
  std::vector<Site> sites;
  std::vector<std::uint8_t> bits;
  for (const SiteBit& r : sorted) {
    if (r.bit > 1) throw std::invalid_argument("cylinder: bits must be 0 or 1");
    if (!sites.empty() && sites.back() == r.site) {
      if (bits.back() != r.bit) return std::nullopt;
      continue;
    }
    sites.push_back(r.site);
    bits.push_back(r.bit);
  }
  return CylinderConstraint(std::move(sites), std::move(bits));
}

CylinderConstraint CylinderConstraint::translated(Site by) const {
  CylinderConstraint out = *this;
  for (Site& s : out.sites_) s = s + by;
  return out;
}

std::vector<SiteBit> CylinderConstraint::requirements() const {
  std::vector<SiteBit> out;
  out.reserve(sites_.size());
  for (std::size_t i = 0; i < sites_.size(); ++i) out.push_back({sites_[i], bits_[i]});
  return out;
}

std::int64_t CylinderConstraint::diameter() const {
  if (sites_.empty()) return 0;
  Site lo = sites_.front(), hi = sites_.front();
  for (const Site& s : sites_) {
    lo = {std::min(lo.x, s.x), std::min(lo.y, s.y)};
    hi = {std::max(hi.x, s.x), std::max(hi.y, s.y)};
  }
  return std::max(hi.x - lo.x, hi.y - lo.y);
}

// ---------------------------------------------------------------------------
// Exact window method
//
// Relations among the coordinate functionals at S that hold on H are the
// elements of the pattern ideal supported in S; any such element is a sum of
// pattern translates lying inside the bounding box of S (the support hull of
// a product contains the hulls of its factors). Dually, the rank of the
// functionals equals the rank of their restriction to the locally valid
// configurations of the box. Ordering box cells row-major, every translate
// has a distinct maximal cell (its pivot), so a locally valid configuration
// is parametrized by the non-pivot cells and each pivot cell is the sum of
// the other cells of its translate, all of which come earlier.

namespace {

struct Box {
  std::int64_t x0, y0, x1, y1;
  std::int64_t width() const { return x1 - x0 + 1; }
  std::int64_t height() const { return y1 - y0 + 1; }
  std::int64_t cells() const { return width() * height(); }
};

Box dilated_box(std::span<const Site> sites, std::int64_t radius) {
  Box b{sites.front().x, sites.front().y, sites.front().x, sites.front().y};
  for (const Site& s : sites) {
    b.x0 = std::min(b.x0, s.x);
    b.y0 = std::min(b.y0, s.y);
    b.x1 = std::max(b.x1, s.x);
    b.y1 = std::max(b.y1, s.y);
  }
  b.x0 -= radius;
  b.y0 -= radius;
  b.x1 += radius;
  b.y1 += radius;
  return b;
}

bool fits(const AlgebraicSystem& sys, std::span<const Site> sites) {
  const Box box = dilated_box(sites, sys.pattern.radius());
  // Guard the multiplication against absurd extents.
  if (box.width() > sys.window_cap_cells || box.height() > sys.window_cap_cells) return false;
  return box.cells() <= sys.window_cap_cells;
}

gf2::BitMatrix window_functionals(const RelationPattern& pattern, std::span<const Site> sites, const Box& box) {
  const std::int64_t W = box.width();
  const std::int64_t H = box.height();
  const std::int64_t span_x = pattern.max_x() - pattern.min_x();
  const std::int64_t span_y = pattern.max_y() - pattern.min_y();
  const std::int64_t translates = std::max<std::int64_t>(0, W - span_x) * std::max<std::int64_t>(0, H - span_y);
  const std::int64_t params = box.cells() - translates;
  if (params > static_cast<std::int64_t>(gf2::kMaxColumns))
    throw CapabilityError("window has " + std::to_string(params) +
                          " free cells, beyond the GF(2) column cap; use Monte Carlo");

  const Site pivot = pattern.pivot();
  std::vector<Site> others;
  for (const Site& o : pattern.support())
    if (o != pivot) others.push_back(o - pivot);

  const auto n_params = static_cast<std::size_t>(params);
  const std::int64_t rows_kept = span_y + 1;
  std::vector<gf2::BitVector> buffer(static_cast<std::size_t>(rows_kept * W), gf2::BitVector(n_params));
  auto slot = [&](std::int64_t x, std::int64_t y) -> gf2::BitVector& {
    return buffer[static_cast<std::size_t>(((y - box.y0) % rows_kept) * W + (x - box.x0))];
  };

  std::unordered_map<Site, std::vector<std::size_t>, SiteHash> wanted;
  for (std::size_t i = 0; i < sites.size(); ++i) wanted[sites[i]].push_back(i);

  gf2::BitMatrix out(sites.size(), n_params);
  std::size_t next_param = 0;
  for (std::int64_t y = box.y0; y <= box.y1; ++y) {
    for (std::int64_t x = box.x0; x <= box.x1; ++x) {
      gf2::BitVector& f = slot(x, y);
      std::fill(f.words().begin(), f.words().end(), 0);
      const std::int64_t tx = x - pivot.x, ty = y - pivot.y;
      const bool is_pivot = tx + pattern.min_x() >= box.x0 && tx + pattern.max_x() <= box.x1 &&
                            ty + pattern.min_y() >= box.y0 && ty + pattern.max_y() <= box.y1;
      if (is_pivot) {
        for (const Site& d : others) f ^= slot(x + d.x, y + d.y);
      } else {
        f.set(next_param++);
      }
      if (auto it = wanted.find({x, y}); it != wanted.end())
        for (std::size_t idx : it->second) out.set_row(idx, f);
    }
  }
  return out;
}

struct Structure {
  std::size_t rank = 0;
  std::vector<gf2::BitVector> relations;
  MeasureMethod method = MeasureMethod::Window;
  unsigned shift = 0;
};

Structure window_structure(const AlgebraicSystem& sys, std::span<const Site> sites) {
  Structure st;
  if (sites.empty()) return st;
  const Box box = dilated_box(sites, sys.pattern.radius());
  const gf2::BitMatrix f = window_functionals(sys.pattern, sites, box);
  st.rank = gf2::rank(f);
  st.relations = gf2::nullspace(f.transpose());
  return st;
}

std::vector<Site> reduce_sites(std::span<const Site> sites, unsigned shift) {
  const std::int64_t scale = std::int64_t{1} << shift;
  std::vector<Site> out;
  out.reserve(sites.size());
  const Site origin = sites.front();
  for (const Site& s : sites) {
    const Site d = s - origin;
    out.push_back({d.x / scale, d.y / scale});
  }
  return out;
}

Structure exact_structure(const AlgebraicSystem& sys, std::span<const Site> sites, MeasureMethod method) {
  if (sites.empty()) return {};
  const bool window_ok = fits(sys, sites);
  if (method == MeasureMethod::Window || (method == MeasureMethod::Auto && window_ok)) {
    if (!window_ok)
      throw CapabilityError("constellation exceeds the exact window cap of " + std::to_string(sys.window_cap_cells) +
                            " cells; use Monte Carlo");
    return window_structure(sys, sites);
  }
  const auto valuation = common_dyadic_valuation(sites);
  if (!valuation || *valuation == 0)
    throw CapabilityError("constellation exceeds the exact window cap of " + std::to_string(sys.window_cap_cells) +
                          " cells and has no dyadic structure; use Monte Carlo");
  const unsigned shift = std::min(*valuation, 62U);
  const std::vector<Site> reduced = reduce_sites(sites, shift);
  if (!fits(sys, reduced))
    throw CapabilityError("dyadically reduced constellation still exceeds the window cap; use Monte Carlo");
  Structure st = window_structure(sys, reduced);
  st.method = MeasureMethod::Dyadic;
  st.shift = shift;
  return st;
}

}  // namespace

std::optional<unsigned> common_dyadic_valuation(std::span<const Site> sites) {
  std::optional<unsigned> best;
  if (sites.empty()) return best;
  const Site origin = sites.front();
  for (const Site& s : sites) {
    for (std::int64_t d : {s.x - origin.x, s.y - origin.y}) {
      if (d == 0) continue;
      const auto v = static_cast<unsigned>(std::countr_zero(static_cast<std::uint64_t>(d < 0 ? -d : d)));
      best = best ? std::min(*best, v) : v;
    }
  }
  return best;
}

CylinderMeasure cylinder_measure(const AlgebraicSystem& sys, const CylinderConstraint& c, MeasureMethod method) {
  Structure st = exact_structure(sys, c.sites(), method);
  CylinderMeasure out;
  out.rank = st.rank;
  out.method = st.method;
  out.dyadic_shift = st.shift;
  out.assumes_squarefree = st.method == MeasureMethod::Dyadic;

  gf2::BitVector bits(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) bits.set(i, c.bits()[i]);
  const bool consistent =
      std::none_of(st.relations.begin(), st.relations.end(), [&](const gf2::BitVector& r) { return r.dot(bits); });
  out.value = consistent ? Dyadic::pow2_inv(static_cast<std::uint32_t>(st.rank)) : Dyadic::zero();
  out.relations = std::move(st.relations);
  return out;
}

std::vector<gf2::BitVector> relation_space(const AlgebraicSystem& sys, std::span<const Site> sites,
                                           MeasureMethod method) {
  std::vector<Site> sorted(sites.begin(), sites.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("relation_space: sites must be distinct");
  return exact_structure(sys, sites, method).relations;
}

// ---------------------------------------------------------------------------
// Torus models

namespace {

std::size_t wrap(std::int64_t v, std::size_t n) {
  const auto m = static_cast<std::int64_t>(n);
  return static_cast<std::size_t>(((v % m) + m) % m);
}

void check_torus(std::size_t width, std::size_t height) {
  if (width < 3 || height < 3) throw std::invalid_argument("torus dimensions must be at least 3x3");
  if (width * height > gf2::kMaxColumns * 64)
    throw CapabilityError("torus too large: " + std::to_string(width) + "x" + std::to_string(height));
}

}  // namespace

bool satisfies_relations(const RelationPattern& pattern, const Grid& grid) {
  for (std::size_t y = 0; y < grid.height; ++y)
    for (std::size_t x = 0; x < grid.width; ++x) {
      std::uint8_t sum = 0;
      for (const Site& o : pattern.support())
        sum ^= grid.at(wrap(static_cast<std::int64_t>(x) + o.x, grid.width),
                       wrap(static_cast<std::int64_t>(y) + o.y, grid.height));
      if (sum) return false;
    }
  return true;
}

gf2::BitMatrix transfer_matrix(const RelationPattern& pattern, std::size_t width) {
  if (!pattern.has_single_top_cell() || pattern.max_y() == pattern.min_y())
    throw std::invalid_argument("transfer matrix needs a pattern with a single top cell spanning two rows");
  const auto state_rows = static_cast<std::size_t>(pattern.max_y() - pattern.min_y());
  const std::size_t n = state_rows * width;
  gf2::BitMatrix t(n, n);
  for (std::size_t r = 0; r + 1 < state_rows; ++r)
    for (std::size_t x = 0; x < width; ++x) t.set(r * width + x, (r + 1) * width + x);
  const Site pivot = pattern.pivot();
  const std::size_t last = state_rows - 1;
  for (std::size_t x = 0; x < width; ++x) {
    for (const Site& o : pattern.support()) {
      if (o == pivot) continue;
      const auto r = static_cast<std::size_t>(o.y - pattern.min_y());
      const std::size_t col = r * width + wrap(static_cast<std::int64_t>(x) - pivot.x + o.x, width);
      const std::size_t row = last * width + x;
      t.set(row, col, !t.get(row, col));
    }
  }
  return t;
}

namespace {

Grid bits_grid(const gf2::BitVector& v, std::size_t width, std::size_t height) {
  Grid g(width, height);
  for (std::size_t i = 0; i < g.cells.size(); ++i) g.cells[i] = v.get(i);
  return g;
}

void verify_kernel(const TorusKernel& k) {
  for (const auto& b : k.basis)
    if (!satisfies_relations(k.pattern, bits_grid(b, k.width, k.height)))
      throw std::logic_error("torus kernel basis element violates a wrapped relation");
}

}  // namespace

TorusKernel torus_kernel_direct(const AlgebraicSystem& sys, std::size_t width, std::size_t height) {
  check_torus(width, height);
  const std::size_t cells = width * height;
  if (cells > gf2::kMaxColumns) throw gf2::DimensionError("direct torus kernel exceeds the column cap");
  gf2::BitMatrix rel(cells, cells);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x)
      for (const Site& o : sys.pattern.support()) {
        const std::size_t col = wrap(static_cast<std::int64_t>(y) + o.y, height) * width +
                                wrap(static_cast<std::int64_t>(x) + o.x, width);
        rel.set(y * width + x, col, !rel.get(y * width + x, col));
      }
  TorusKernel k{width, height, sys.pattern, gf2::nullspace(rel)};
  verify_kernel(k);
  return k;
}

TorusKernel torus_kernel(const AlgebraicSystem& sys, std::size_t width, std::size_t height) {
  check_torus(width, height);
  const RelationPattern& p = sys.pattern;
  const auto extent = static_cast<std::size_t>(p.max_y() - p.min_y());
  if (!p.has_single_top_cell() || extent == 0 || height < extent) return torus_kernel_direct(sys, width, height);

  const gf2::BitMatrix t = transfer_matrix(p, width);
  gf2::BitMatrix fixed = gf2::mat_pow(t, height);
  fixed ^= gf2::BitMatrix::identity(t.rows());
  const std::vector<gf2::BitVector> states = gf2::nullspace(fixed);

  TorusKernel k{width, height, p, {}};
  k.basis.reserve(states.size());
  for (const auto& s : states) {
    gf2::BitVector config(width * height);
    gf2::BitVector cur = s;
    for (std::size_t i = 0; i < extent * width && i < width * height; ++i)
      if (cur.get(i)) config.set(i);
    for (std::size_t row = extent; row < height; ++row) {
      cur = t * cur;
      const std::size_t base = (extent - 1) * width;
      for (std::size_t x = 0; x < width; ++x)
        if (cur.get(base + x)) config.set(row * width + x);
    }
    k.basis.push_back(std::move(config));
  }
  verify_kernel(k);
  return k;
}

Grid sample_configuration(const TorusKernel& kernel, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  gf2::BitVector acc(kernel.width * kernel.height);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < kernel.basis.size(); ++i) {
    if (i % 64 == 0) word = rng();
    if ((word >> (i % 64)) & 1U) acc ^= kernel.basis[i];
  }
  return bits_grid(acc, kernel.width, kernel.height);
}

std::size_t default_torus_side(std::int64_t diameter) {
  const std::int64_t need = std::max<std::int64_t>(15, 4 * diameter);
  std::size_t side = 15;
  while (static_cast<std::int64_t>(side) < need) side = side * 2 + 1;
  return side;
}

namespace {

// Values of each basis element at the wrapped sites: row s, column i.
struct WrappedEvent {
  std::vector<std::size_t> cells;
  std::vector<std::uint8_t> bits;
  bool contradictory = false;
};

WrappedEvent wrap_event(const TorusKernel& k, const CylinderConstraint& c) {
  std::vector<SiteBit> reqs;
  for (const SiteBit& r : c.requirements())
    reqs.push_back({{static_cast<std::int64_t>(wrap(r.site.x, k.width)),
                     static_cast<std::int64_t>(wrap(r.site.y, k.height))},
                    r.bit});
  WrappedEvent ev;
  auto merged = CylinderConstraint::merge(reqs);
  if (!merged) {
    ev.contradictory = true;
    return ev;
  }
  for (const SiteBit& r : merged->requirements()) {
    ev.cells.push_back(static_cast<std::size_t>(r.site.y) * k.width + static_cast<std::size_t>(r.site.x));
    ev.bits.push_back(r.bit);
  }
  return ev;
}

}  // namespace

Dyadic torus_cylinder_measure(const TorusKernel& kernel, const CylinderConstraint& c) {
  const WrappedEvent ev = wrap_event(kernel, c);
  if (ev.contradictory) return Dyadic::zero();
  if (ev.cells.empty()) return Dyadic::one();
  gf2::BitMatrix a(ev.cells.size(), kernel.dimension());
  for (std::size_t s = 0; s < ev.cells.size(); ++s)
    for (std::size_t i = 0; i < kernel.dimension(); ++i)
      if (kernel.basis[i].get(ev.cells[s])) a.set(s, i);
  gf2::BitVector b(ev.cells.size());
  for (std::size_t s = 0; s < ev.bits.size(); ++s) b.set(s, ev.bits[s]);
  if (!gf2::solve_affine(a, b)) return Dyadic::zero();
  return Dyadic::pow2_inv(static_cast<std::uint32_t>(gf2::rank(a)));
}

MeasureValue mc_cylinder_measure(const TorusKernel& kernel, const CylinderConstraint& c, std::uint64_t samples,
                                 std::uint64_t seed, unsigned workers) {
  if (samples == 0) throw std::invalid_argument("Monte Carlo needs at least one sample");
  const WrappedEvent ev = wrap_event(kernel, c);
  if (ev.contradictory) return MeasureValue::estimated({0.0, 0.0, samples});

  const std::size_t dim = kernel.dimension();
  const std::size_t nwords = gf2::words_for(dim);
  std::vector<gf2::BitVector> masks;
  for (std::size_t cell : ev.cells) {
    gf2::BitVector m(dim);
    for (std::size_t i = 0; i < dim; ++i)
      if (kernel.basis[i].get(cell)) m.set(i);
    masks.push_back(std::move(m));
  }

  constexpr std::uint64_t kChunk = 8192;
  const std::uint64_t chunks = (samples + kChunk - 1) / kChunk;
  std::vector<std::uint64_t> hits(chunks, 0);
  parallel_for(chunks, workers, [&](std::size_t chunk) {
    std::mt19937_64 rng(substream_seed(seed, chunk));
    const std::uint64_t begin = chunk * kChunk;
    const std::uint64_t end = std::min(samples, begin + kChunk);
    std::vector<gf2::Word> coef(nwords);
    std::uint64_t count = 0;
    for (std::uint64_t s = begin; s < end; ++s) {
      for (auto& w : coef) w = rng();
      if (dim % 64 && nwords) coef.back() &= (gf2::Word{1} << (dim % 64)) - 1;
      bool ok = true;
      for (std::size_t j = 0; j < masks.size() && ok; ++j) {
        auto mw = masks[j].words();
        gf2::Word acc = 0;
        for (std::size_t w = 0; w < nwords; ++w) acc ^= coef[w] & mw[w];
        ok = static_cast<std::uint8_t>(std::popcount(acc) & 1) == ev.bits[j];
      }
      count += ok;
    }
    hits[chunk] = count;
  });
  std::uint64_t total = 0;
  for (auto h : hits) total += h;
  const double p = static_cast<double>(total) / static_cast<double>(samples);
  return MeasureValue::estimated({p, std::sqrt(p * (1.0 - p) / static_cast<double>(samples)), samples});
}

// ---------------------------------------------------------------------------
// Bernoulli shift

MeasureValue bernoulli_cylinder_measure(std::span<const SiteBit> requirements) {
  auto merged = CylinderConstraint::merge(requirements);
  if (!merged) return MeasureValue::exact(0);
  return MeasureValue::exact(Dyadic::pow2_inv(static_cast<std::uint32_t>(merged->size())).to_rational());
}

MeasureValue homoclinic_decay(const CylinderConstraint& window, std::int64_t flip_site, std::int64_t n) {
  const Site moved{flip_site + n, 0};
  std::vector<SiteBit> flipped = window.requirements();
  for (SiteBit& r : flipped)
    if (r.site == moved) r.bit ^= 1U;
  const std::vector<SiteBit> original = window.requirements();
  std::vector<SiteBit> both = original;
  both.insert(both.end(), flipped.begin(), flipped.end());

  const Rational mu_b = *bernoulli_cylinder_measure(original).exact_value();
  const Rational mu_sb = *bernoulli_cylinder_measure(flipped).exact_value();
  const Rational mu_both = *bernoulli_cylinder_measure(both).exact_value();
  return MeasureValue::exact(mu_b + mu_sb - 2 * mu_both);
}

}  // namespace mixlab

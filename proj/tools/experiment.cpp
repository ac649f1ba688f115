#include "experiment.hpp"

#include "mixlab/algebraic.hpp"
#include "mixlab/correlations.hpp"
#include "mixlab/joinings.hpp"
#include "mixlab/percolation.hpp"
#include "mixlab/rankone.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <sstream>

namespace mixlab::cli {

using nlohmann::json;

namespace {

constexpr const char* kTool = "mixlab";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

template <typename T>
T get_field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ValidationError(where + ": missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(where + ": bad '" + key + "': " + e.what());
  }
}

// ---------------------------------------------------------------- JSON <-> domain

json site_json(Site s) { return json::array({s.x, s.y}); }

Site site_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
    throw ValidationError(where + ": a site is [x, y] with integer coordinates");
  return {j[0].get<std::int64_t>(), j[1].get<std::int64_t>()};
}

std::vector<Site> sites_from(const json& j, const std::string& where) {
  if (!j.is_array()) throw ValidationError(where + ": expected a list of [x, y] sites");
  std::vector<Site> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(site_from(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

json sites_json(const std::vector<Site>& sites) {
  json a = json::array();
  for (const auto& s : sites) a.push_back(site_json(s));
  return a;
}

Event event_from(const json& j, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": an event is an object");
  if (j.contains("cylinder")) {
    const auto& c = j.at("cylinder");
    if (!c.is_array()) throw ValidationError(where + ".cylinder: expected [[x, y, bit], ...]");
    std::vector<Site> sites;
    std::vector<std::uint8_t> bits;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const auto& e = c[i];
      const std::string w = where + ".cylinder[" + std::to_string(i) + "]";
      if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() || !e[1].is_number_integer() ||
          !e[2].is_number_integer() || (e[2] != 0 && e[2] != 1))
        throw ValidationError(w + ": expected [x, y, bit] with bit 0 or 1");
      sites.push_back({e[0].get<std::int64_t>(), e[1].get<std::int64_t>()});
      bits.push_back(e[2].get<std::uint8_t>());
    }
    try {
      return CylinderConstraint(std::move(sites), std::move(bits));
    } catch (const std::invalid_argument& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  if (j.contains("levels")) {
    LevelSet a;
    a.levels = get_field<std::vector<std::uint32_t>>(j, "levels", where);
    a.spacer = j.value("spacer", false);
    return a;
  }
  throw ValidationError(where + ": an event needs 'cylinder' or 'levels'");
}

std::vector<Event> events_from(const json& constellation) {
  if (!constellation.is_object() || !constellation.contains("events"))
    throw ValidationError("constellation: missing 'events'");
  const auto& ev = constellation.at("events");
  if (!ev.is_array() || ev.empty()) throw ValidationError("constellation.events: expected a non-empty list");
  std::vector<Event> out;
  for (std::size_t i = 0; i < ev.size(); ++i) out.push_back(event_from(ev[i], "constellation.events[" + std::to_string(i) + "]"));
  return out;
}

Constellation constellation_from(const json& j) {
  auto events = events_from(j);
  std::vector<Site> shifts;
  if (j.contains("shifts")) {
    shifts = sites_from(j.at("shifts"), "constellation.shifts");
  } else {
    shifts.assign(events.size(), Site{0, 0});
  }
  if (shifts.size() != events.size())
    throw ValidationError("constellation: " + std::to_string(shifts.size()) + " shifts for " +
                          std::to_string(events.size()) + " events");
  return Constellation(std::move(shifts), std::move(events));
}

json quantity_json(const Quantity& q) {
  json j{{"value", q.value}, {"stderr", q.std_error}};
  if (q.exact) j["exact"] = to_string(*q.exact);
  return j;
}

json certificate_json(const RelationCertificate& c) {
  json rel = json::array();
  for (const auto& r : c.cross_relations) {
    json idx = json::array();
    for (std::size_t i = 0; i < c.sites.size(); ++i)
      if (r.get(i)) idx.push_back(site_json(c.sites[i]));
    rel.push_back(idx);
  }
  return {{"sites", sites_json(c.sites)}, {"cross_relations", rel}, {"text", c.to_string()}};
}

// ---------------------------------------------------------------- systems

json algebraic_system_json(const std::vector<Site>& pattern, std::int64_t cap) {
  return {{"kind", "algebraic"}, {"pattern", sites_json(pattern)}, {"window_cap_cells", cap}};
}

AlgebraicSystem algebraic_from(const json& sys) {
  AlgebraicSystem out;
  try {
    out.pattern = RelationPattern(sites_from(sys.at("pattern"), "system.pattern"));
  } catch (const json::exception&) {
    throw ValidationError("system: missing 'pattern'");
  } catch (const ValidationError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("system.pattern: ") + e.what());
  }
  out.window_cap_cells = sys.value("window_cap_cells", out.window_cap_cells);
  return out;
}

AlgebraicSystem require_algebraic(const json& sys, const std::string& command) {
  const auto kind = get_field<std::string>(sys, "kind", "system");
  if (kind != "algebraic") throw ValidationError(command + " needs an algebraic system, got '" + kind + "'");
  return algebraic_from(sys);
}

std::vector<Site> parse_pattern(const std::string& text) {
  std::vector<Site> sites;
  std::istringstream in(text);
  for (std::string item; std::getline(in, item, ';');) {
    const auto comma = item.find(',');
    if (comma == std::string::npos) throw ValidationError("--pattern: expected 'x,y;x,y;...', got '" + item + "'");
    try {
      sites.push_back({std::stoll(item.substr(0, comma)), std::stoll(item.substr(comma + 1))});
    } catch (const std::exception&) {
      throw ValidationError("--pattern: bad site '" + item + "'");
    }
  }
  if (sites.empty()) throw ValidationError("--pattern: no sites");
  return sites;
}

RankOneSpec rank_one_spec_from(const json& sys) {
  try {
    return rank_one_from_json(sys.at("spec"));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("system.spec: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("system.spec: ") + e.what());
  }
}

// Fewest stages whose last tower is at least `length` tall.
RankOneSpec preset_for_length(const std::string& name, std::size_t length, std::size_t stage) {
  for (std::size_t stages = stage;; ++stages) {
    const auto spec = rank_one_preset(name, stages);
    const auto h = tower_heights(spec);
    if (h.back() >= length) return spec;
  }
}

json rankone_system_json(const RankOneSpec& spec, std::size_t stage, std::size_t length) {
  return {{"kind", "rankone"}, {"spec", rank_one_to_json(spec)}, {"stage", stage}, {"length", length}};
}

std::shared_ptr<const SymbolicWord> word_of(const json& sys) {
  const auto spec = rank_one_spec_from(sys);
  const auto stage = get_field<std::size_t>(sys, "stage", "system");
  const auto length = get_field<std::size_t>(sys, "length", "system");
  try {
    return std::make_shared<const SymbolicWord>(generate_word(spec, stage, length));
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("system: ") + e.what());
  }
}

std::unique_ptr<CorrelationOracle> make_oracle(const json& config, unsigned workers) {
  const json& sys = config.at("system");
  const auto kind = get_field<std::string>(sys, "kind", "system");
  const auto method = config.value("method", std::string("exact"));
  if (kind == "algebraic") {
    const auto alg = algebraic_from(sys);
    if (method == "mc")
      return std::make_unique<MonteCarloOracle>(alg, get_field<std::uint64_t>(config, "samples", "config"),
                                                get_field<std::uint64_t>(config, "seed", "config"),
                                                config.value("side", std::size_t{0}), workers);
    if (method != "exact") throw ValidationError("method must be 'exact' or 'mc', got '" + method + "'");
    return std::make_unique<AlgebraicOracle>(alg);
  }
  if (kind == "bernoulli") return std::make_unique<BernoulliOracle>();
  if (kind == "product") {
    // Correlations replaced by the product of the single-event Haar measures.
    auto base = std::make_shared<AlgebraicOracle>(algebraic_from(sys.at("base")));
    return std::make_unique<SyntheticOracle>(
        [base](const Constellation& c) {
          return MeasureValue::exact(*product_of_measures(*base, c.events).exact);
        },
        true, "product");
  }
  if (kind == "rankone") return std::make_unique<WordOracle>(word_of(sys), workers);
  throw ValidationError("system: unknown kind '" + kind + "'");
}

std::string one_line(const json& config) { return config.dump(); }

// ---------------------------------------------------------------- commands

Artifact cmd_measure(const json& config, unsigned workers) {
  const auto oracle = make_oracle(config, workers);
  const Constellation c = constellation_from(config.at("constellation"));
  const auto corr = Quantity::from(kfold_correlation(*oracle, c));
  const auto product = product_of_measures(*oracle, c.events);
  json out{{"config", config}, {"tool", kTool}, {"oracle", oracle->name()}};
  out["correlation"] = quantity_json(corr);
  out["product"] = quantity_json(product);
  Quantity defect{corr.value - product.value, std::hypot(corr.std_error, product.std_error), std::nullopt};
  if (corr.exact && product.exact) defect = Quantity::of_exact(*corr.exact - *product.exact);
  out["defect"] = quantity_json(defect);
  if (const auto cert = oracle->relation_certificate(c); cert && !cert->empty()) out["certificate"] = certificate_json(*cert);
  if (config.at("system").at("kind") == "algebraic" && c.size() == 1) {
    if (const auto* cyl = std::get_if<CylinderConstraint>(&c.events[0])) {
      const auto m = cylinder_measure(algebraic_from(config.at("system")), *cyl);
      out["rank"] = m.rank;
      out["method"] = m.method == MeasureMethod::Window ? "window" : "dyadic";
      out["assumes_squarefree"] = m.assumes_squarefree;
    }
  }
  return {"measure.json", out.dump(2) + "\n"};
}

ShiftFamily family_from(const json& config, const Constellation& c, std::size_t k) {
  const json& f = config.at("family");
  const auto kind = get_field<std::string>(f, "kind", "family");
  if (kind == "dyadic") {
    DyadicFamily d;
    d.base = f.contains("base") ? sites_from(f.at("base"), "family.base") : c.shifts;
    d.n_min = f.value("n_min", d.n_min);
    d.n_max = f.value("n_max", d.n_max);
    if (d.base.size() != k + 1) throw ValidationError("family.base: need " + std::to_string(k + 1) + " sites");
    return d;
  }
  if (kind == "arithmetic") {
    ArithmeticFamily a;
    if (f.contains("multipliers")) {
      a.multipliers = f.at("multipliers").get<std::vector<std::int64_t>>();
    } else {
      for (std::size_t i = 1; i <= k; ++i) a.multipliers.push_back(static_cast<std::int64_t>(i));
    }
    a.m_start = f.value("m_start", a.m_start);
    a.m_step = f.value("m_step", a.m_step);
    if (f.contains("direction")) a.direction = site_from(f.at("direction"), "family.direction");
    return a;
  }
  if (kind == "random") {
    RandomSeparatedFamily r;
    r.min_gap = f.value("min_gap", r.min_gap);
    r.max_diameter = f.value("max_diameter", r.max_diameter);
    r.two_dimensional = f.value("two_dimensional", r.two_dimensional);
    r.non_dyadic = f.value("non_dyadic", r.non_dyadic);
    r.seed = get_field<std::uint64_t>(config, "seed", "config");
    return r;
  }
  throw ValidationError("family.kind must be dyadic, arithmetic or random");
}

Artifact cmd_scan(const json& config, unsigned workers) {
  const auto oracle = make_oracle(config, workers);
  const auto format = config.at("format").get<std::string>();
  const auto mode = get_field<std::string>(config, "mode", "config");
  const std::string comment = "config: " + one_line(config);
  std::ostringstream out;
  if (mode == "dev") {
    const auto events = events_from(config.at("constellation"));
    if (events.size() != 3) throw ValidationError("dev scan needs exactly 3 events (A, B, C)");
    const double eps = get_field<double>(config, "epsilon", "config");
    const auto h = get_field<std::int64_t>(config, "h", "config");
    const Site dir = site_from(config.at("direction"), "direction");
    DevScan scan;
    try {
      scan = dev_scan(*oracle, events[0], events[1], events[2], eps, h, dir, workers);
    } catch (const CapabilityError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ValidationError(e.what());
    }
    if (format == "csv") {
      write_dev_csv(out, scan.field, comment);
    } else if (format == "svg") {
      write_dev_heatmap_svg(out, scan, comment);
    } else {
      json der = json::array();
      for (auto [z, w] : scan.der_pairs) der.push_back({z, w});
      json j{{"config", config},       {"tool", kTool},           {"epsilon", scan.epsilon},
             {"h", scan.h},            {"q_size", scan.q_size},   {"der_size", scan.der_pairs.size()},
             {"der_pairs", der},       {"dev", scan.dev},         {"dev_h2", scan.dev_h2},
             {"monotonicity_violations", scan.monotonicity_violations}};
      out << j.dump(2) << '\n';
    }
  } else if (mode == "defect") {
    const Constellation c = constellation_from(config.at("constellation"));
    const auto k = get_field<std::size_t>(config, "order", "config");
    if (c.size() != k + 1) throw ValidationError("defect scan of order k needs k + 1 events");
    const auto family = family_from(config, c, k);
    ScanOptions opt;
    opt.workers = workers;
    MixDefect scan;
    try {
      scan = mix_defect_scan(*oracle, k, c.events, family, get_field<std::size_t>(config, "budget", "config"), opt);
    } catch (const CapabilityError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ValidationError(e.what());
    }
    if (format == "csv") {
      write_defect_csv(out, scan, comment);
    } else if (format == "json") {
      json records = json::array();
      for (const auto& r : scan.records) {
        json rec{{"shifts", sites_json(r.shifts)},
                 {"correlation", quantity_json(r.correlation)},
                 {"product", quantity_json(r.product)},
                 {"defect", quantity_json(r.defect)}};
        if (r.certificate) rec["certificate"] = certificate_json(*r.certificate);
        records.push_back(rec);
      }
      json j{{"config", config},
             {"tool", kTool},
             {"order", scan.order},
             {"scanned", scan.scanned},
             {"max_abs_defect", scan.max_abs_defect},
             {"monotonicity_violations", scan.monotonicity_violations},
             {"records", records}};
      if (scan.max_abs_defect_exact) j["max_abs_defect_exact"] = to_string(*scan.max_abs_defect_exact);
      out << j.dump(2) << '\n';
    } else {
      throw ValidationError("defect scans write csv or json");
    }
  } else {
    throw ValidationError("mode must be 'dev' or 'defect'");
  }
  return {"scan." + format, out.str()};
}

json order_change_json(const OrderChange& c) {
  return {{"tensor", tensor_to_json(c.tensor)},
          {"nonnegative", c.nonnegative},
          {"normalized", c.normalized},
          {"classification", classification_to_json(c.classification)}};
}

JoiningTensor joining_source(const json& config, json& out) {
  const json& input = config.at("input");
  if (!input.is_null()) {
    out["source"] = "input";
    try {
      return tensor_from_json(input);
    } catch (const json::exception& e) {
      throw ValidationError(std::string("input tensor: ") + e.what());
    }
  }
  // Limit along the dyadic rescalings of the pattern, cells {x_0 = 0}, {x_0 = 1}.
  const auto sys = require_algebraic(config.at("system"), "joining");
  const auto order = get_field<std::size_t>(config, "order", "config");
  const auto& base = sys.pattern.support();
  if (base.size() != order)
    throw ValidationError("joining: order " + std::to_string(order) + " needs a pattern with that many sites (has " +
                          std::to_string(base.size()) + ")");
  const std::vector<Event> cells{CylinderConstraint::coordinate({0, 0}, 0), CylinderConstraint::coordinate({0, 0}, 1)};
  DyadicFamily fam{base, get_field<unsigned>(config, "n_min", "config"), get_field<unsigned>(config, "n_max", "config")};
  if (fam.n_max < fam.n_min) throw ValidationError("joining: n_max < n_min");
  LimitOptions opt;
  opt.stable_runs = get_field<std::size_t>(config, "stable_runs", "config");
  out["source"] = "limit";
  out["family"] = {{"base", sites_json(base)}, {"n_min", fam.n_min}, {"n_max", fam.n_max}};
  return limit_joining(AlgebraicOracle(sys), cells, generate_shifts(fam, order - 1, fam.n_max - fam.n_min + 1), opt);
}

Artifact cmd_joining(const json& config, unsigned) {
  json out{{"config", config}, {"tool", kTool}};
  const JoiningTensor t = joining_source(config, out);
  out["tensor"] = tensor_to_json(t);
  const auto cls = classify(t);
  out["classification"] = classification_to_json(cls);
  if (t.order() >= 2) {
    const auto p = markov_from_joining(t);
    out["markov"] = {{"source_order", p.source_order()}, {"positive", p.positive()}, {"stochastic", p.stochastic()}};
    if (t.order() == 3) out["chain"] = chain_to_json(chain_check(p));
    if (t.order() == 4) out["raised"] = order_change_json(raise_order(p));
  }
  if (t.order() >= 4 && !cls.is_product && cls.max_product_marginal + 1 == t.order()) {
    const auto lowered = lower_order(t);
    out["lowered"] = order_change_json(lowered);
    if (!out.contains("raised") && lowered.tensor.order() == 4)
      out["raised"] = order_change_json(raise_order(markov_from_joining(lowered.tensor)));
  }
  return {"joining.json", out.dump(2) + "\n"};
}

Artifact cmd_percolate(const json& config, unsigned workers) {
  SweepOptions opt;
  opt.sizes = get_field<std::vector<std::size_t>>(config, "sizes", "config");
  opt.samples = get_field<std::size_t>(config, "samples", "config");
  opt.connectivity = get_field<int>(config, "connectivity", "config");
  opt.seed = get_field<std::uint64_t>(config, "seed", "config");
  opt.workers = workers;
  if (opt.connectivity != 4 && opt.connectivity != 8) throw ValidationError("connectivity must be 4 or 8");
  std::vector<SweepRow> rows;
  try {
    rows = percolation_sweep(require_algebraic(config.at("system"), "percolate"), opt);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  std::ostringstream out;
  if (config.at("format") == "csv") {
    write_sweep_csv(out, rows, "config: " + one_line(config) + "\nbit 0 is dark, bit 1 light; wrap = horizontal or vertical winding");
  } else {
    json r = json::array();
    for (const auto& row : rows)
      r.push_back({{"size", row.size},
                   {"bit", row.bit},
                   {"wrap_fraction", row.wrap_fraction},
                   {"largest_fraction_mean", row.largest_fraction_mean},
                   {"stderr", row.stderr_},
                   {"samples", row.samples},
                   {"seed", row.seed}});
    out << json{{"config", config}, {"tool", kTool}, {"rows", r}}.dump(2) << '\n';
  }
  return {"percolate." + config.at("format").get<std::string>(), out.str()};
}

Artifact cmd_render(const json& config, unsigned) {
  const auto sys = require_algebraic(config.at("system"), "render");
  const auto size = get_field<std::size_t>(config, "size", "config");
  if (size == 0) throw ValidationError("size must be positive");
  const auto kernel = torus_kernel(sys, size, size);
  const Grid grid = sample_configuration(kernel, get_field<std::uint64_t>(config, "seed", "config"));
  if (!satisfies_relations(sys.pattern, grid)) throw std::logic_error("sampled configuration violates the relations");
  std::ostringstream out;
  if (config.at("format") == "pbm") {
    std::ostringstream body;
    write_pbm(body, grid);
    const std::string text = body.str();
    // Comment after the magic number; dark (bit 0) pixels are black.
    out << "P1\n# config: " << one_line(config) << '\n' << text.substr(3);
  } else {
    RenderOptions opt;
    opt.cell_px = get_field<std::size_t>(config, "cell_px", "config");
    opt.color_clusters = get_field<bool>(config, "color_clusters", "config");
    opt.target = get_field<std::uint8_t>(config, "target", "config");
    opt.connectivity = get_field<int>(config, "connectivity", "config");
    if (opt.connectivity != 4 && opt.connectivity != 8) throw ValidationError("connectivity must be 4 or 8");
    opt.title = "config: " + one_line(config);
    write_grid_svg(out, grid, opt);
  }
  return {"render." + config.at("format").get<std::string>(), out.str()};
}

Artifact cmd_rankone(const json& config, unsigned) {
  const json& sys = config.at("system");
  if (get_field<std::string>(sys, "kind", "system") != "rankone") throw ValidationError("rankone needs a rank-one system");
  const auto spec = rank_one_spec_from(sys);
  const auto heights = tower_heights(spec);
  std::ostringstream out;
  if (config.at("format") == "csv") {
    out << "# config: " << one_line(config) << "\n# level measures include spacer mass (normalized space)\n";
    out << "stage,height,level_measure\n";
    for (std::size_t n = 0; n < heights.size(); ++n)
      out << n << ',' << heights[n] << ',' << to_string(level_measure(spec, n)) << '\n';
  } else {
    json rows = json::array();
    for (std::size_t n = 0; n < heights.size(); ++n)
      rows.push_back({{"stage", n}, {"height", heights[n]}, {"level_measure", to_string(level_measure(spec, n))}});
    json j{{"config", config}, {"tool", kTool}, {"towers", rows}};
    if (get_field<bool>(config, "export_word", "config")) j["word"] = word_to_rle_json(*word_of(sys));
    out << j.dump(2) << '\n';
  }
  return {"rankone." + config.at("format").get<std::string>(), out.str()};
}

}  // namespace

json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ValidationError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON (" +
                          e.what() + ")");
  }
}

json load_json_file(const std::string& path) { return parse_json_text(read_file(path), path); }

json config_from_artifact(const std::string& path) {
  const std::string text = read_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    json j = parse_json_text(text, path);
    if (j.contains("config")) return j.at("config");
    if (j.contains("command")) return j;
    throw ValidationError(path + ": no embedded config");
  }
  const auto at = text.find("config: ");
  if (at == std::string::npos) throw ValidationError(path + ": no embedded config");
  const auto start = at + 8;
  const auto end = text.find_first_of("\n<", start);
  std::string line = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
  // SVG descriptions are XML-escaped.
  for (const auto& [from, to] : {std::pair<std::string, std::string>{"&lt;", "<"}, {"&gt;", ">"}, {"&amp;", "&"}}) {
    for (std::size_t p = line.find(from); p != std::string::npos; p = line.find(from, p + to.size()))
      line.replace(p, from.size(), to);
  }
  return parse_json_text(line, path);
}

json resolve_system(const std::string& system, const std::string& pattern, std::size_t length, std::size_t stage) {
  json sys;
  const auto presets = rank_one_preset_names();
  if (system == "ledrappier") {
    sys = algebraic_system_json(RelationPattern::ledrappier().support(), AlgebraicSystem{}.window_cap_cells);
  } else if (system == "bernoulli") {
    sys = {{"kind", "bernoulli"}};
  } else if (system == "product") {
    sys = {{"kind", "product"},
           {"base", algebraic_system_json(RelationPattern::ledrappier().support(), AlgebraicSystem{}.window_cap_cells)}};
  } else if (std::find(presets.begin(), presets.end(), system) != presets.end()) {
    if (length == 0) length = 1;
    sys = rankone_system_json(preset_for_length(system, length, stage), stage, length);
  } else {
    const auto first = system.find_first_not_of(" \t\r\n");
    sys = first != std::string::npos && system[first] == '{' ? parse_json_text(system, "--system") : load_json_file(system);
    if (!sys.is_object() || !sys.contains("kind")) throw ValidationError("system JSON needs a 'kind'");
  }
  if (!pattern.empty()) {
    const auto sites = parse_pattern(pattern);
    if (sys.at("kind") == "algebraic") {
      sys["pattern"] = sites_json(sites);
    } else if (sys.at("kind") == "product") {
      sys["base"]["pattern"] = sites_json(sites);
    } else {
      throw ValidationError("--pattern applies to algebraic systems only");
    }
  }
  if (sys.at("kind") == "algebraic") algebraic_from(sys);
  if (sys.at("kind") == "rankone") rank_one_spec_from(sys);
  return sys;
}

std::vector<std::string> formats_of(const std::string& command) {
  if (command == "measure" || command == "joining") return {"json"};
  if (command == "scan") return {"csv", "json", "svg"};
  if (command == "percolate") return {"csv", "json"};
  if (command == "render") return {"svg", "pbm"};
  if (command == "rankone") return {"json", "csv"};
  throw ValidationError("unknown command '" + command + "'");
}

json default_config(const std::string& command) {
  json c{{"command", command}, {"seed", 1}, {"format", formats_of(command).front()}};
  const json ledrappier = resolve_system("ledrappier", "", 0, 0);
  if (command == "measure") {
    c.update({{"system", ledrappier}, {"constellation", nullptr}, {"method", "exact"}, {"samples", 100000}, {"side", 0}});
  } else if (command == "scan") {
    c.update({{"system", ledrappier},
              {"constellation", nullptr},
              {"method", "exact"},
              {"samples", 100000},
              {"side", 0},
              {"mode", "dev"},
              {"epsilon", 0.05},
              {"h", 32},
              {"direction", {1, 0}},
              {"order", 3},
              {"budget", 100},
              {"family", {{"kind", "dyadic"}, {"n_min", 1}, {"n_max", 20}}}});
  } else if (command == "joining") {
    c.update({{"system", ledrappier}, {"input", nullptr}, {"order", 5}, {"n_min", 1}, {"n_max", 8}, {"stable_runs", 3}});
  } else if (command == "percolate") {
    c.update({{"system", ledrappier}, {"sizes", {15, 31, 63}}, {"samples", 32}, {"connectivity", 4}});
  } else if (command == "render") {
    c.update({{"system", ledrappier},
              {"size", 31},
              {"connectivity", 4},
              {"target", 1},
              {"color_clusters", false},
              {"cell_px", 8}});
  } else if (command == "rankone") {
    c.update({{"system", resolve_system("staircase", "", 1000000, 0)}, {"export_word", false}});
  }
  return c;
}

Artifact run_experiment(const json& config, unsigned workers) {
  const auto command = get_field<std::string>(config, "command", "config");
  const auto formats = formats_of(command);
  const auto format = get_field<std::string>(config, "format", "config");
  if (std::find(formats.begin(), formats.end(), format) == formats.end())
    throw ValidationError(command + " does not write '" + format + "'");
  if (!config.contains("seed")) throw ValidationError("config: the seed must be explicit");
  try {
    if (command == "measure") {
      if (config.at("constellation").is_null()) throw ValidationError("measure needs --constellation");
      return cmd_measure(config, workers);
    }
    if (command == "scan") {
      if (config.at("constellation").is_null()) throw ValidationError("scan needs --constellation");
      return cmd_scan(config, workers);
    }
    if (command == "joining") return cmd_joining(config, workers);
    if (command == "percolate") return cmd_percolate(config, workers);
    if (command == "render") return cmd_render(config, workers);
    return cmd_rankone(config, workers);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

}  // namespace mixlab::cli

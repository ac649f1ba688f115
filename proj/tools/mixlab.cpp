// mixlab: command-line front end. Each subcommand resolves a config (defaults,
// then an optional --config artifact, then explicit flags), runs it and writes
// one artifact <command>.<format> into --out.

#include "experiment.hpp"

#include "mixlab/joinings.hpp"
#include "mixlab/measure.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

namespace {

using nlohmann::json;
using mixlab::cli::ValidationError;

struct Flags {
  std::string system, pattern, constellation, config, out = ".", format, method, mode, family, input;
  double epsilon = 0;
  std::int64_t h = 0;
  std::size_t order = 0, budget = 0, size = 0, length = 1000000, stage = 2, cell_px = 0;
  std::uint64_t seed = 0, samples = 0;
  unsigned workers = 0, n_min = 0, n_max = 0;
  int connectivity = 0, target = 0;
  std::vector<std::size_t> sizes;
  bool color_clusters = false, export_word = false;
};

struct Options {
  std::map<std::string, CLI::Option*> by_name;
  bool given(const std::string& name) const {
    auto it = by_name.find(name);
    return it != by_name.end() && it->second->count() > 0;
  }
};

void add_common(CLI::App* sub, Flags& f, Options& o) {
  o.by_name["system"] = sub->add_option("--system", f.system, "ledrappier | bernoulli | product | rank-one preset | JSON");
  o.by_name["pattern"] = sub->add_option("--pattern", f.pattern, "relation pattern 'x,y;x,y;...'");
  o.by_name["seed"] = sub->add_option("--seed", f.seed, "64-bit seed for all randomness");
  o.by_name["format"] = sub->add_option("--format", f.format, "csv | json | svg | pbm");
  o.by_name["config"] = sub->add_option("--config", f.config, "artifact or config JSON to re-run");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--workers", f.workers, "worker threads (0 = all cores)");
  o.by_name["length"] = sub->add_option("--length", f.length, "rank-one word length");
  o.by_name["stage"] = sub->add_option("--stage", f.stage, "rank-one symbol stage K");
}

json build_config(const std::string& command, const Flags& f, const Options& o) {
  json config = mixlab::cli::default_config(command);
  if (o.given("config")) {
    const json loaded = mixlab::cli::config_from_artifact(f.config);
    if (loaded.value("command", "") != command)
      throw ValidationError("--config holds a '" + loaded.value("command", "?") + "' config, not '" + command + "'");
    for (const auto& [key, value] : loaded.items()) config[key] = value;
  }
  if (o.given("system") || o.given("pattern") || o.given("length") || o.given("stage")) {
    const std::string base = o.given("system") ? f.system : config.at("system").dump();
    json sys = mixlab::cli::resolve_system(base, f.pattern, f.length, f.stage);
    if (!o.given("system") && sys.at("kind") == "rankone") {
      if (o.given("length")) sys["length"] = f.length;
      if (o.given("stage")) sys["stage"] = f.stage;
    }
    config["system"] = sys;
  }
  if (o.given("constellation")) config["constellation"] = mixlab::cli::load_json_file(f.constellation);
  if (o.given("input")) config["input"] = mixlab::cli::load_json_file(f.input);
  if (o.given("family")) config["family"] = {{"kind", f.family}};
  auto set = [&](const char* name, const json& value) {
    if (o.given(name)) config[name] = value;
  };
  set("seed", f.seed);
  set("format", f.format);
  set("method", f.method);
  set("samples", f.samples);
  set("mode", f.mode);
  set("epsilon", f.epsilon);
  set("h", f.h);
  set("order", f.order);
  set("budget", f.budget);
  set("n_min", f.n_min);
  set("n_max", f.n_max);
  set("sizes", f.sizes);
  set("connectivity", f.connectivity);
  set("size", f.size);
  set("target", f.target);
  set("cell_px", f.cell_px);
  if (o.given("color_clusters")) config["color_clusters"] = f.color_clusters;
  if (o.given("export_word")) config["export_word"] = f.export_word;
  return config;
}

int run(const std::string& command, const Flags& f, const Options& o) {
  const json config = build_config(command, f, o);
  const auto artifact = mixlab::cli::run_experiment(config, f.workers);
  std::filesystem::create_directories(f.out);
  const auto path = std::filesystem::path(f.out) / artifact.file_name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << artifact.content;
  std::cout << path.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixlab: multiple-mixing experiments (Ledrappier, joinings, rank-one, percolation)"};
  app.set_help_flag("--help", "print help");  // -h would clash with --h
  app.require_subcommand(1);
  Flags f;
  std::map<std::string, Options> options;

  auto* measure = app.add_subcommand("measure", "exact or Monte-Carlo measure of a constellation");
  add_common(measure, f, options["measure"]);
  options["measure"].by_name["constellation"] = measure->add_option("--constellation", f.constellation, "constellation JSON file");
  options["measure"].by_name["method"] = measure->add_option("--method", f.method, "exact | mc");
  options["measure"].by_name["samples"] = measure->add_option("--samples", f.samples, "Monte-Carlo samples");

  auto* scan = app.add_subcommand("scan", "dev-scan or mix-defect scan");
  add_common(scan, f, options["scan"]);
  auto& so = options["scan"].by_name;
  so["constellation"] = scan->add_option("--constellation", f.constellation, "events (and base shifts) JSON file");
  so["mode"] = scan->add_option("--mode", f.mode, "dev | defect");
  so["epsilon"] = scan->add_option("--epsilon", f.epsilon, "deviation threshold");
  so["h"] = scan->add_option("--h", f.h, "scan range [0,h]^2");
  so["order"] = scan->add_option("--order", f.order, "mixing order k for defect scans");
  so["family"] = scan->add_option("--family", f.family, "dyadic | arithmetic | random");
  so["budget"] = scan->add_option("--budget", f.budget, "number of shift tuples");
  so["method"] = scan->add_option("--method", f.method, "exact | mc");
  so["samples"] = scan->add_option("--samples", f.samples, "Monte-Carlo samples");

  auto* joining = app.add_subcommand("joining", "limit joining, classification, order changes, chain check");
  add_common(joining, f, options["joining"]);
  auto& jo = options["joining"].by_name;
  jo["input"] = joining->add_option("--input", f.input, "tensor JSON file instead of the limit");
  jo["order"] = joining->add_option("--order", f.order, "joining order (pattern size)");
  jo["n_min"] = joining->add_option("--n-min", f.n_min, "first dyadic scale");
  jo["n_max"] = joining->add_option("--n-max", f.n_max, "last dyadic scale");

  auto* percolate = app.add_subcommand("percolate", "wrap fractions of sampled torus configurations");
  add_common(percolate, f, options["percolate"]);
  auto& po = options["percolate"].by_name;
  po["sizes"] = percolate->add_option("--sizes", f.sizes, "lattice sizes (>= 8)")->delimiter(',');
  po["samples"] = percolate->add_option("--samples", f.samples, "samples per size");
  po["connectivity"] = percolate->add_option("--connectivity", f.connectivity, "4 or 8");

  auto* render = app.add_subcommand("render", "draw one sampled configuration");
  add_common(render, f, options["render"]);
  auto& ro = options["render"].by_name;
  ro["size"] = render->add_option("--size", f.size, "torus side");
  ro["connectivity"] = render->add_option("--connectivity", f.connectivity, "4 or 8");
  ro["target"] = render->add_option("--target", f.target, "bit whose clusters are colored");
  ro["cell_px"] = render->add_option("--cell-px", f.cell_px, "pixels per cell");
  ro["color_clusters"] = render->add_flag("--color-clusters", f.color_clusters, "color clusters of the target bit");

  auto* rankone = app.add_subcommand("rankone", "tower heights, level measures and words");
  add_common(rankone, f, options["rankone"]);
  options["rankone"].by_name["export_word"] = rankone->add_flag("--export-word", f.export_word, "include the RLE word");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, f, options[command]);
  } catch (const mixlab::JoiningLimitError& e) {
    std::cerr << "capability: " << e.what() << " (" << e.trace.size() << " tuples traced)\n";
    return 3;
  } catch (const mixlab::CapabilityError& e) {
    std::cerr << "capability: " << e.what() << "\nhint: use --method mc for a Monte-Carlo estimate\n";
    return 3;
  } catch (const mixlab::JoiningError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
}

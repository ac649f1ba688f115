#pragma once

// Resolved experiment configurations and the artifacts they produce. A config
// is a JSON object holding everything that influences the output (command,
// system, events, parameters, seed, format); the worker count is an execution
// detail and is kept out of it, since results never depend on it.

#include "json.hpp"

#include <stdexcept>
#include <string>

namespace mixlab::cli {

/// Bad user input: malformed files, unknown names, inconsistent parameters.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Parses JSON text; syntax errors become ValidationError with line:column.
nlohmann::json parse_json_text(const std::string& text, const std::string& origin);
nlohmann::json load_json_file(const std::string& path);

/// Extracts the embedded config from an artifact (JSON with a "config" key,
/// a bare config object, or a CSV/PBM/SVG file with a "config: " line).
nlohmann::json config_from_artifact(const std::string& path);

/// System argument: a preset name (ledrappier, bernoulli, product, or a
/// rank-one preset), inline JSON, or a JSON file. `pattern` overrides the
/// algebraic pattern ("x,y;x,y;..."), `length` sizes rank-one words.
nlohmann::json resolve_system(const std::string& system, const std::string& pattern, std::size_t length,
                              std::size_t stage);

/// Default config for a command; every key the command reads is present.
nlohmann::json default_config(const std::string& command);

/// Formats a command accepts; the first is its default.
std::vector<std::string> formats_of(const std::string& command);

struct Artifact {
  std::string file_name;
  std::string content;
};

/// Runs the experiment. Throws ValidationError, CapabilityError or
/// JoiningError subclasses.
Artifact run_experiment(const nlohmann::json& config, unsigned workers);

}  // namespace mixlab::cli

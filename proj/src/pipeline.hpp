#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "systems.hpp"

namespace varjet {

inline constexpr const char* kBundleSchema = "varjet-bundle/1";
inline constexpr const char* kVersion = "1.0.0";

// Run configuration shared by every front-end operation. Either `builtin`
// names a catalog system (parameters resolved against its schema) or an
// inline system supplies dimension, variable names and field expressions.
struct RunConfig {
    std::string builtin;

    int dim = 0;
    std::vector<std::string> vars;
    std::vector<std::string> field;

    ParamMap params;
    std::vector<double> initial;  // empty: builtin default
    double t0 = 0.0;
    std::optional<double> span;   // t_end = t0 + span; builtin default otherwise
    int order = 3;
    int pivot = 0;                // 1-based; 0 means "builtin default / 1"
    double rtol = 1e-10;
    double atol = 1e-12;
    std::optional<bool> normalize;  // default: on for builtins, off for inline systems
    double kernel_tol = 1e-8;
    int time_samples = 10;
    std::int64_t size_cap = 20000;
    bool timings = false;

    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

// parse `key = value` configuration text (the documented config-file format)
RunConfig config_from_text(const std::string& text);

// parse an inline system definition file (key = value: dim, vars, field.N,
// param.NAME) into the config fields
void load_system_file(RunConfig& config, const std::string& text);

nlohmann::json run_jets(const RunConfig& config);
nlohmann::json run_verify(const RunConfig& config, const nlohmann::json& bundle);
nlohmann::json run_conjecture(const RunConfig& config);
nlohmann::json list_builtins_json();

// structural validation of a bundle against the shipped schema description;
// returns an empty string when valid, a diagnostic otherwise
std::string validate_bundle_structure(const nlohmann::json& bundle);

}  // namespace varjet

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "skembed/process_spec.hpp"

namespace skembed {

enum class run_mode { theorem1, supermartingale, negative_control };

inline const char* to_string(run_mode m) {
    switch (m) {
        case run_mode::theorem1: return "theorem1";
        case run_mode::supermartingale: return "supermartingale";
        default: return "negative_control";
    }
}

inline run_mode run_mode_from_string(const std::string& s) {
    if (s == "theorem1") return run_mode::theorem1;
    if (s == "supermartingale") return run_mode::supermartingale;
    if (s == "negative_control") return run_mode::negative_control;
    throw std::invalid_argument("config: unknown mode '" + s + "'");
}

struct tolerance_config {
    double se_multiplier = 3.0;
    double allowance = 0.02;      // absolute slack on identity and mean gaps
    double tv = 0.02;             // per-stage total-variation bound
    double eq8_allowance = 0.05;  // slack on the final local-time bound
};

struct budget_config {
    double horizon = 0.001;   // tolerated fraction of paths cut by t_max
    double declared = 0.01;   // tolerated fraction declared absorbed (geometric view)
};

struct convergence_config {
    int window = 3;
    double threshold = 0.01;
};

struct experiment_config {
    process_spec spec;
    run_mode mode = run_mode::theorem1;
    std::uint64_t num_paths = 10000;
    double dt = 1e-4;
    double t_max = 300.0;
    std::uint64_t seed = 1;
    bool bridge_correction = true;
    double band_epsilon_factor = 2.0;  // occupation band epsilon = factor * sqrt(dt)
    double delta = 1e-4;               // declared-absorption threshold, geometric view
    tolerance_config tolerances;
    budget_config budgets;
    convergence_config convergence;
    std::vector<double> tail_grid = {1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0};
    std::string output_dir;  // empty: do not write files
};

// Overrides taken from command-line flags; always win over config fields.
struct cli_overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> num_paths;
    std::optional<double> dt;
    std::optional<std::string> output_dir;
};

inline void validate_config(const experiment_config& cfg) {
    const bool super_mode = cfg.mode == run_mode::supermartingale;
    const bool super_spec = cfg.spec.kind == process_kind::supermartingale;
    if (super_mode != super_spec)
        throw std::invalid_argument(std::string("config: mode ") + to_string(cfg.mode) +
                                    " does not match spec kind " + to_string(cfg.spec.kind));
    const auto violations = validate_spec(cfg.spec);
    if (!violations.empty())
        throw std::invalid_argument("config: invalid spec: " + violations.front().message +
                                    (violations.size() > 1
                                         ? " (and " + std::to_string(violations.size() - 1) + " more)"
                                         : ""));
    if (cfg.num_paths < 2) throw std::invalid_argument("config: num_paths must be at least 2");
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("config: dt must be positive");
    if (!(cfg.t_max >= cfg.dt)) throw std::invalid_argument("config: t_max must be at least dt");
    if (!(cfg.band_epsilon_factor > 0.0))
        throw std::invalid_argument("config: band_epsilon_factor must be positive");
    if (!(cfg.delta > 0.0)) throw std::invalid_argument("config: delta must be positive");
    if (cfg.convergence.window < 1) throw std::invalid_argument("config: convergence.window must be at least 1");
    if (cfg.convergence.window > cfg.spec.n_max)
        throw std::invalid_argument("config: convergence.window exceeds n_max");
    if (!(cfg.convergence.threshold > 0.0))
        throw std::invalid_argument("config: convergence.threshold must be positive");
    if (!std::is_sorted(cfg.tail_grid.begin(), cfg.tail_grid.end()))
        throw std::invalid_argument("config: tail_grid must be sorted");
    for (const double t : cfg.tail_grid)
        if (!(t > 0.0)) throw std::invalid_argument("config: tail_grid times must be positive");
    if (super_mode && !(cfg.spec.root_value > 0.0))
        throw std::invalid_argument("config: supermartingale runs need a positive root for the geometric view");
}

inline experiment_config config_from_json(const nlohmann::json& j) {
    detail::require_keys(j,
                         {"spec", "mode", "num_paths", "dt", "t_max", "seed", "bridge_correction",
                          "band_epsilon_factor", "delta", "tolerances", "budgets", "convergence",
                          "tail_grid", "output_dir"},
                         "config");
    if (!j.contains("spec")) throw std::invalid_argument("config: missing key 'spec'");

    experiment_config cfg;
    cfg.spec = spec_from_json(j.at("spec"));
    if (j.contains("mode")) cfg.mode = run_mode_from_string(j.at("mode").get<std::string>());
    if (j.contains("num_paths")) cfg.num_paths = j.at("num_paths").get<std::uint64_t>();
    if (j.contains("dt")) cfg.dt = j.at("dt").get<double>();
    if (j.contains("t_max")) cfg.t_max = j.at("t_max").get<double>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("bridge_correction")) cfg.bridge_correction = j.at("bridge_correction").get<bool>();
    if (j.contains("band_epsilon_factor")) cfg.band_epsilon_factor = j.at("band_epsilon_factor").get<double>();
    if (j.contains("delta")) cfg.delta = j.at("delta").get<double>();
    if (j.contains("tolerances")) {
        const auto& t = j.at("tolerances");
        detail::require_keys(t, {"se_multiplier", "allowance", "tv", "eq8_allowance"}, "config.tolerances");
        if (t.contains("se_multiplier")) cfg.tolerances.se_multiplier = t.at("se_multiplier").get<double>();
        if (t.contains("allowance")) cfg.tolerances.allowance = t.at("allowance").get<double>();
        if (t.contains("tv")) cfg.tolerances.tv = t.at("tv").get<double>();
        if (t.contains("eq8_allowance")) cfg.tolerances.eq8_allowance = t.at("eq8_allowance").get<double>();
    }
    if (j.contains("budgets")) {
        const auto& b = j.at("budgets");
        detail::require_keys(b, {"horizon", "declared"}, "config.budgets");
        if (b.contains("horizon")) cfg.budgets.horizon = b.at("horizon").get<double>();
        if (b.contains("declared")) cfg.budgets.declared = b.at("declared").get<double>();
    }
    if (j.contains("convergence")) {
        const auto& c = j.at("convergence");
        detail::require_keys(c, {"window", "threshold"}, "config.convergence");
        if (c.contains("window")) cfg.convergence.window = c.at("window").get<int>();
        if (c.contains("threshold")) cfg.convergence.threshold = c.at("threshold").get<double>();
    }
    if (j.contains("tail_grid")) cfg.tail_grid = j.at("tail_grid").get<std::vector<double>>();
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    validate_config(cfg);
    return cfg;
}

inline void apply_overrides(experiment_config& cfg, const cli_overrides& o) {
    if (o.seed) cfg.seed = *o.seed;
    if (o.num_paths) cfg.num_paths = *o.num_paths;
    if (o.dt) cfg.dt = *o.dt;
    if (o.output_dir) cfg.output_dir = *o.output_dir;
    validate_config(cfg);
}

// Full echo of the effective configuration; part of the report provenance.
inline nlohmann::json config_to_json(const experiment_config& cfg) {
    nlohmann::json j;
    j["spec"] = to_json(cfg.spec);
    j["mode"] = to_string(cfg.mode);
    j["num_paths"] = cfg.num_paths;
    j["dt"] = cfg.dt;
    j["t_max"] = cfg.t_max;
    j["seed"] = cfg.seed;
    j["bridge_correction"] = cfg.bridge_correction;
    j["band_epsilon_factor"] = cfg.band_epsilon_factor;
    j["delta"] = cfg.delta;
    j["tolerances"] = {{"se_multiplier", cfg.tolerances.se_multiplier},
                       {"allowance", cfg.tolerances.allowance},
                       {"tv", cfg.tolerances.tv},
                       {"eq8_allowance", cfg.tolerances.eq8_allowance}};
    j["budgets"] = {{"horizon", cfg.budgets.horizon}, {"declared", cfg.budgets.declared}};
    j["convergence"] = {{"window", cfg.convergence.window}, {"threshold", cfg.convergence.threshold}};
    j["tail_grid"] = cfg.tail_grid;
    j["output_dir"] = cfg.output_dir;
    return j;
}

}  // namespace skembed

// skembed: run embedding experiments, validate process specs, inspect
// splitting plans and re-render stored reports.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "skembed/skembed.hpp"

namespace {

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return nlohmann::json::parse(in);
}

void print_check(const skembed::check_result& c) {
    std::printf("check %-28s %s  value=%.6g bound=%.6g%s\n", c.name.c_str(),
                c.pass ? "PASS" : "FAIL", c.value, c.bound, c.gated ? "" : "  (not gated)");
}

int cmd_run(const std::string& config_path, const skembed::cli_overrides& overrides) {
    skembed::experiment_config cfg = skembed::config_from_json(load_json_file(config_path));
    skembed::apply_overrides(cfg, overrides);

    const skembed::experiment_report report = skembed::run_experiment(cfg);
    std::printf("mode=%s paths=%llu dt=%g seed=%llu k_bound=%.6g\n", skembed::to_string(report.mode),
                static_cast<unsigned long long>(report.counters.num_paths), cfg.dt,
                static_cast<unsigned long long>(cfg.seed), report.k_bound);
    for (const skembed::stage_row& r : report.stages)
        std::printf("stage %3d  L_hat=%-10.6g absB_hat=%-10.6g exact=%-10.6g tv=%-9.3g %s\n", r.n,
                    r.l_hat, r.absb_hat, r.exact_abs, r.tv, r.pass ? "pass" : "FAIL");
    for (const skembed::check_result& c : report.checks) print_check(c);
    if (!cfg.output_dir.empty()) {
        skembed::write_report(report, cfg.output_dir);
        std::printf("report written to %s\n", cfg.output_dir.c_str());
    }
    std::printf("overall: %s\n", report.all_pass ? "PASS" : "FAIL");
    return report.all_pass ? 0 : 1;
}

int cmd_validate(const std::string& spec_path) {
    const skembed::process_spec spec = skembed::spec_from_json(load_json_file(spec_path));
    const auto violations = skembed::validate_spec(spec);
    if (violations.empty()) {
        std::printf("spec valid: kind=%s root=%s n_max=%d kernels=%zu\n", skembed::to_string(spec.kind),
                    skembed::canonical_state_string(spec.root_value).c_str(), spec.n_max,
                    spec.kernels.size());
        return 0;
    }
    for (const auto& v : violations)
        std::printf("violation at stage %d, state %s: %s\n", v.stage,
                    skembed::canonical_state_string(v.state).c_str(), v.message.c_str());
    return 1;
}

void print_tree(const skembed::split_node& node, int indent) {
    if (node.is_leaf()) {
        std::printf("%*sleaf %s\n", indent, "", skembed::canonical_state_string(node.center).c_str());
        return;
    }
    std::printf("%*sexit [%s, %s]  p_upper=%.17g\n", indent, "",
                skembed::canonical_state_string(node.lower_mean).c_str(),
                skembed::canonical_state_string(node.upper_mean).c_str(), node.p_upper);
    print_tree(*node.lower, indent + 2);
    print_tree(*node.upper, indent + 2);
}

int cmd_plan(const std::string& spec_path, std::optional<int> stage, std::optional<double> state) {
    const skembed::process_spec spec = skembed::spec_from_json(load_json_file(spec_path));
    const auto violations = skembed::validate_spec(spec);
    if (!violations.empty()) {
        std::printf("invalid spec: %s\n", violations.front().message.c_str());
        return 1;
    }
    double worst = 0.0;
    for (const auto& [key, kernel] : spec.kernels) {
        if (stage && key.first != *stage) continue;
        if (state && skembed::canonical_state(*state) != key.second) continue;
        const bool detailed = stage.has_value();
        if (spec.kind == skembed::process_kind::martingale) {
            const skembed::split_tree tree = skembed::build_split_tree(kernel, key.second);
            const double err = skembed::tv_distance(skembed::plan_exact_law(tree), kernel);
            worst = std::max(worst, err);
            std::printf("stage %d state %-12s leaves=%d depth=%d exactness=%.3g\n", key.first,
                        skembed::canonical_state_string(key.second).c_str(),
                        skembed::tree_leaf_count(tree), skembed::tree_depth(tree), err);
            if (detailed) print_tree(tree, 2);
        } else {
            const skembed::super_plan plan = skembed::build_super_plan(kernel, key.second);
            const double err =
                skembed::tv_distance(skembed::super_plan_exact_law(plan, key.second), kernel);
            worst = std::max(worst, err);
            std::printf("stage %d state %-12s drop=%s zero_mass=%.17g exactness=%.3g\n", key.first,
                        skembed::canonical_state_string(key.second).c_str(),
                        plan.drop_level ? skembed::canonical_state_string(*plan.drop_level).c_str()
                                        : "none",
                        plan.zero_atom_mass, err);
            if (detailed && plan.split) print_tree(*plan.split, 2);
        }
    }
    std::printf("max exactness error: %.3g\n", worst);
    return worst <= 1e-12 ? 0 : 1;
}

int cmd_report(const std::string& dir) {
    const skembed::experiment_report report = skembed::rerender_report(dir);
    for (const skembed::check_result& c : report.checks) print_check(c);
    std::printf("overall: %s\n", report.all_pass ? "PASS" : "FAIL");
    return report.all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stopping-time embeddings of discrete-time (super)martingales in Brownian motion"};
    app.require_subcommand(1);

    std::string config_path, spec_path, report_dir;
    std::optional<std::uint64_t> seed, paths;
    std::optional<double> dt;
    std::optional<std::string> out_dir;
    std::optional<int> plan_stage;
    std::optional<double> plan_state;

    CLI::App* run = app.add_subcommand("run", "Run an experiment from a JSON config");
    run->add_option("-c,--config", config_path, "experiment config file")->required();
    run->add_option("--seed", seed, "override the experiment seed");
    run->add_option("--paths", paths, "override the number of paths");
    run->add_option("--dt", dt, "override the grid step");
    run->add_option("--out", out_dir, "override the output directory");

    CLI::App* validate = app.add_subcommand("validate", "Validate a process spec");
    validate->add_option("-s,--spec", spec_path, "process spec file")->required();

    CLI::App* plan = app.add_subcommand("plan", "Print splitting plans and their exactness");
    plan->add_option("-s,--spec", spec_path, "process spec file")->required();
    plan->add_option("--stage", plan_stage, "restrict to one stage (prints full trees)");
    plan->add_option("--state", plan_state, "restrict to one state");

    CLI::App* report = app.add_subcommand("report", "Re-render a stored report's summary");
    report->add_option("-d,--dir", report_dir, "report directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            skembed::cli_overrides overrides;
            overrides.seed = seed;
            overrides.num_paths = paths;
            overrides.dt = dt;
            overrides.output_dir = out_dir;
            return cmd_run(config_path, overrides);
        }
        if (validate->parsed()) return cmd_validate(spec_path);
        if (plan->parsed()) return cmd_plan(spec_path, plan_stage, plan_state);
        if (report->parsed()) return cmd_report(report_dir);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "skembed/runner.hpp"

namespace skembed {

constexpr const char* k_version = "0.1.0";
constexpr const char* k_generator = "philox4x32-10+ziggurat";

// All floating-point numbers in the CSV files carry 17 significant digits,
// enough to reproduce the doubles bit for bit on re-read.
inline std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

//================================= writers ==================================

inline std::string stages_csv(const std::vector<stage_row>& rows) {
    std::ostringstream out;
    out << "n,L_hat,absB_hat,exact_E_absM,k_bound,tv,se_L,se_absB,pass\n";
    for (const stage_row& r : rows) {
        out << r.n << ',' << format_g17(r.l_hat) << ',' << format_g17(r.absb_hat) << ','
            << format_g17(r.exact_abs) << ',' << format_g17(r.k_bound) << ',' << format_g17(r.tv)
            << ',' << format_g17(r.se_l) << ',' << format_g17(r.se_absb) << ',' << (r.pass ? 1 : 0)
            << '\n';
    }
    return out.str();
}

inline std::string tail_csv(const std::vector<tail_row>& rows) {
    std::ostringstream out;
    out << "t,frac\n";
    for (const tail_row& r : rows) out << format_g17(r.t) << ',' << format_g17(r.frac) << '\n';
    return out.str();
}

inline std::string convergence_csv(const std::vector<convergence_row>& rows) {
    std::ostringstream out;
    out << "window,threshold,exceed_frac,mean_max_jump\n";
    for (const convergence_row& r : rows)
        out << r.window << ',' << format_g17(r.threshold) << ',' << format_g17(r.exceed_frac) << ','
            << format_g17(r.mean_max_jump) << '\n';
    return out.str();
}

inline nlohmann::json summary_json(const experiment_report& report) {
    nlohmann::json j;
    j["all_pass"] = report.all_pass;
    j["k_bound"] = report.k_bound;
    nlohmann::json checks = nlohmann::json::array();
    for (const check_result& c : report.checks)
        checks.push_back({{"name", c.name},
                          {"gated", c.gated},
                          {"value", c.value},
                          {"bound", c.bound},
                          {"pass", c.pass},
                          {"details", c.details}});
    j["checks"] = std::move(checks);
    j["counters"] = {{"num_paths", report.counters.num_paths},
                     {"completed_paths", report.counters.completed_paths},
                     {"horizon_failures", report.counters.horizon_failures},
                     {"horizon_denominator", report.counters.horizon_denominator},
                     {"declared_absorbed", report.counters.declared_absorbed},
                     {"consistency_violations", report.counters.consistency_violations}};
    j["config"] = report.config_echo;
    j["provenance"] = {{"version", k_version},
                       {"generator", k_generator},
                       {"seed", report.config_echo.at("seed")}};
    return j;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

inline void write_report(const experiment_report& report, const std::string& dir) {
    const std::filesystem::path base(dir);
    std::filesystem::create_directories(base);
    write_file(base / "stages.csv", stages_csv(report.stages));
    write_file(base / "tail.csv", tail_csv(report.tail));
    write_file(base / "convergence.csv", convergence_csv(report.convergence));
    write_file(base / "summary.json", summary_json(report).dump(2) + "\n");
}

//================================= re-render =================================

namespace detail {

inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                                      const std::string& expected_header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": missing header");
    if (line != expected_header)
        throw std::runtime_error(path.string() + ": unexpected header '" + line + "'");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (;;) {
            const std::size_t comma = line.find(',', start);
            fields.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

}  // namespace detail

// Rebuild an experiment_report from a stored report directory: numbers come
// from the CSV files and the summary, while every pass flag is recomputed
// through the same functions the runner used. Writing the result back with
// write_report leaves an untampered report byte-identical.
inline experiment_report load_report(const std::string& dir) {
    const std::filesystem::path base(dir);
    std::ifstream in(base / "summary.json");
    if (!in) throw std::runtime_error("cannot read " + (base / "summary.json").string());
    const nlohmann::json summary = nlohmann::json::parse(in);

    experiment_report report;
    report.config_echo = summary.at("config");
    report.mode = run_mode_from_string(report.config_echo.at("mode").get<std::string>());
    report.k_bound = summary.at("k_bound").get<double>();

    tolerance_config tol;
    const auto& jt = report.config_echo.at("tolerances");
    tol.se_multiplier = jt.at("se_multiplier").get<double>();
    tol.allowance = jt.at("allowance").get<double>();
    tol.tv = jt.at("tv").get<double>();
    tol.eq8_allowance = jt.at("eq8_allowance").get<double>();
    budget_config bud;
    bud.horizon = report.config_echo.at("budgets").at("horizon").get<double>();
    bud.declared = report.config_echo.at("budgets").at("declared").get<double>();

    const auto& jc = summary.at("counters");
    report.counters.num_paths = jc.at("num_paths").get<std::uint64_t>();
    report.counters.completed_paths = jc.at("completed_paths").get<std::uint64_t>();
    report.counters.horizon_failures = jc.at("horizon_failures").get<std::uint64_t>();
    report.counters.horizon_denominator = jc.at("horizon_denominator").get<std::uint64_t>();
    report.counters.declared_absorbed = jc.at("declared_absorbed").get<std::uint64_t>();
    report.counters.consistency_violations = jc.at("consistency_violations").get<std::uint64_t>();

    for (const auto& fields :
         detail::read_csv(base / "stages.csv", "n,L_hat,absB_hat,exact_E_absM,k_bound,tv,se_L,se_absB,pass")) {
        if (fields.size() != 9) throw std::runtime_error("stages.csv: malformed row");
        stage_row r;
        r.n = std::stoi(fields[0]);
        r.l_hat = std::strtod(fields[1].c_str(), nullptr);
        r.absb_hat = std::strtod(fields[2].c_str(), nullptr);
        r.exact_abs = std::strtod(fields[3].c_str(), nullptr);
        r.k_bound = std::strtod(fields[4].c_str(), nullptr);
        r.tv = std::strtod(fields[5].c_str(), nullptr);
        r.se_l = std::strtod(fields[6].c_str(), nullptr);
        r.se_absb = std::strtod(fields[7].c_str(), nullptr);
        r.pass = stage_row_pass(report.mode, tol, r);
        report.stages.push_back(r);
    }
    for (const auto& fields : detail::read_csv(base / "tail.csv", "t,frac")) {
        if (fields.size() != 2) throw std::runtime_error("tail.csv: malformed row");
        report.tail.push_back({std::strtod(fields[0].c_str(), nullptr), std::strtod(fields[1].c_str(), nullptr)});
    }
    for (const auto& fields :
         detail::read_csv(base / "convergence.csv", "window,threshold,exceed_frac,mean_max_jump")) {
        if (fields.size() != 4) throw std::runtime_error("convergence.csv: malformed row");
        report.convergence.push_back({std::stoi(fields[0]), std::strtod(fields[1].c_str(), nullptr),
                                      std::strtod(fields[2].c_str(), nullptr),
                                      std::strtod(fields[3].c_str(), nullptr)});
    }

    // The cross-mode numbers cannot be recomputed from the table; carry them
    // over from the stored checks and re-derive only the flag.
    std::optional<cross_mode_info> cross;
    for (const auto& c : summary.at("checks")) {
        if (c.at("name") == "cross_mode_tv") {
            cross_mode_info info;
            info.max_tv = c.at("value").get<double>();
            info.per_stage = c.at("details").at("per_stage");
            cross = std::move(info);
        }
    }

    report.checks = evaluate_checks(report.mode, tol, bud, report.stages, report.counters, cross);
    report.all_pass = overall_pass(report.checks);
    return report;
}

inline experiment_report rerender_report(const std::string& dir) {
    const experiment_report report = load_report(dir);
    write_report(report, dir);
    return report;
}

}  // namespace skembed

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "skembed/embedding.hpp"
#include "skembed/stats.hpp"
#include "skembed/super_embed.hpp"
#include "support/oracles.hpp"

using namespace skembed;

namespace {

brownian_path::params path_params(std::uint64_t path_id, double dt, double t_max, double start = 0.0) {
    brownian_path::params p;
    p.seed = 777;
    p.path_id = path_id;
    p.dt = dt;
    p.t_max = t_max;
    p.start = start;
    return p;
}

process_spec inline_super_spec(double root, int n_max,
                               std::vector<std::pair<std::pair<int, double>, discrete_distribution>> kernels) {
    process_spec spec;
    spec.kind = process_kind::supermartingale;
    spec.root_value = root;
    spec.n_max = n_max;
    for (auto& [key, kernel] : kernels) spec.kernels.emplace(key, std::move(kernel));
    return spec;
}

}  // namespace

TEST_CASE("split tree for a fair coin") {
    const auto tree = build_split_tree(make_distribution({{-1.0, 0.5}, {1.0, 0.5}}), 0.0);
    REQUIRE(!tree.is_leaf());
    REQUIRE(tree.center == 0.0);
    REQUIRE(tree.lower_mean == -1.0);
    REQUIRE(tree.upper_mean == 1.0);
    REQUIRE(tree.p_upper == 0.5);
    REQUIRE(tree.lower->is_leaf());
    REQUIRE(tree.upper->is_leaf());
    REQUIRE(tree.lower->center == -1.0);
    REQUIRE(tree.upper->center == 1.0);
}

TEST_CASE("split tree for four uniform atoms") {
    const auto tree = build_split_tree(
        make_distribution({{-2.0, 0.25}, {-1.0, 0.25}, {1.0, 0.25}, {2.0, 0.25}}), 0.0);
    REQUIRE(tree.lower_mean == -1.5);
    REQUIRE(tree.upper_mean == 1.5);
    REQUIRE(tree.p_upper == 0.5);
    REQUIRE(tree.lower->center == -1.5);
    REQUIRE(tree.lower->lower_mean == -2.0);
    REQUIRE(tree.lower->upper_mean == -1.0);
    REQUIRE(tree.lower->p_upper == 0.5);
    REQUIRE(tree.upper->center == 1.5);
    REQUIRE(tree.upper->p_upper == 0.5);
    REQUIRE(tree_depth(tree) == 2);
    REQUIRE(tree_leaf_count(tree) == 4);
}

TEST_CASE("split tree branch probability equals the upper mass") {
    const auto tree = build_split_tree(make_distribution({{-2.0, 1.0 / 3.0}, {1.0, 2.0 / 3.0}}), 0.0);
    REQUIRE(tree.lower_mean == -2.0);
    REQUIRE(tree.upper_mean == 1.0);
    REQUIRE(tree.p_upper == 2.0 / 3.0);
}

TEST_CASE("split tree of a point mass is a single leaf") {
    const auto tree = build_split_tree(point_mass(0.75), 0.75);
    REQUIRE(tree.is_leaf());
    REQUIRE(tree.center == 0.75);
    REQUIRE(tree_depth(tree) == 0);
}

TEST_CASE("split tree rejects a mean mismatch") {
    REQUIRE_THROWS_AS(build_split_tree(make_distribution({{-1.0, 0.5}, {1.0, 0.5}}), 0.25),
                      std::invalid_argument);
}

TEST_CASE("random targets are realized exactly") {
    std::mt19937 rng(12345);
    for (int trial = 0; trial < 20; ++trial) {
        const double from = trial % 2 == 0 ? 0.0 : 1.5;
        const auto target = oracles::random_centered_target(rng, from);
        const auto tree = build_split_tree(target, target.mean());
        CAPTURE(trial, target.size());
        REQUIRE(tree_leaf_count(tree) == int(target.size()));
        REQUIRE(tree_depth(tree) <= int(target.size()) - 1);
        REQUIRE(tv_distance(plan_exact_law(tree), target) <= 1e-12);

        // Independent traversal agrees with the library's law computation.
        const auto law = oracles::tree_law(tree);
        for (const auto& [v, p] : law)
            REQUIRE(plan_exact_law(tree).mass_at(v) == Catch::Approx(p).margin(1e-14));
    }
}

TEST_CASE("preset kernels are realized exactly") {
    for (const auto& spec : {make_stopped_walk_spec(-3, 5, 10), make_random_walk_spec(6)}) {
        const compiled_plans plans(spec);
        for (const auto& [key, tree] : plans.trees()) {
            const auto* kernel = find_kernel(spec, key.first, key.second);
            REQUIRE(kernel != nullptr);
            REQUIRE(tv_distance(plan_exact_law(tree), *kernel) <= 1e-12);
        }
    }
}

TEST_CASE("embedding a point kernel takes no time") {
    process_spec spec;
    spec.kind = process_kind::martingale;
    spec.root_value = 0.0;
    spec.n_max = 1;
    spec.kernels.emplace(std::make_pair(0, 0.0), point_mass(0.0));
    const compiled_plans plans(spec);
    brownian_path path(path_params(0, 1e-3, 1.0));
    const auto result = embed_sequence(path, spec, plans);
    REQUIRE(!result.hit_horizon);
    REQUIRE(result.values == std::vector<double>{0.0, 0.0});
    REQUIRE(result.stopping_times == std::vector<double>{0.0, 0.0});
    REQUIRE(path.steps_taken() == 0);
}

TEST_CASE("embedding requires the path to start at the root") {
    const auto spec = make_random_walk_spec(1);
    const compiled_plans plans(spec);
    brownian_path path(path_params(0, 1e-3, 1.0, 2.0));
    REQUIRE_THROWS_AS(embed_sequence(path, spec, plans), std::invalid_argument);
}

TEST_CASE("one-stage embedding lands on the atoms with the right frequencies") {
    const auto spec = make_random_walk_spec(1);
    const compiled_plans plans(spec);
    const int n = 10000;
    int upper = 0;
    running_stat exit_time;
    for (int id = 0; id < n; ++id) {
        brownian_path path(path_params(std::uint64_t(id), 1e-3, 500.0));
        const auto result = embed_sequence(path, spec, plans);
        REQUIRE(!result.hit_horizon);
        REQUIRE((result.values[1] == -1.0 || result.values[1] == 1.0));
        REQUIRE(result.stopping_times[1] == path.time());
        if (result.values[1] == 1.0) ++upper;
        exit_time.add(result.stopping_times[1]);
    }
    REQUIRE(double(upper) / n == Catch::Approx(0.5).margin(0.015));
    REQUIRE(exit_time.mean() == Catch::Approx(1.0).margin(0.03));
}

TEST_CASE("two-stage embedding reproduces the walk law") {
    const auto spec = make_random_walk_spec(2);
    const compiled_plans plans(spec);
    const auto exact = unconditional_law(spec, 2);
    const int n = 10000;
    std::vector<double> finals;
    finals.reserve(n);
    for (int id = 0; id < n; ++id) {
        brownian_path path(path_params(std::uint64_t(id), 1e-3, 500.0));
        const auto result = embed_sequence(path, spec, plans);
        REQUIRE(!result.hit_horizon);
        // Monotone times, values on the walk lattice, local time never drops.
        REQUIRE(result.stopping_times[0] <= result.stopping_times[1]);
        REQUIRE(result.stopping_times[1] <= result.stopping_times[2]);
        REQUIRE(result.local_times[0] <= result.local_times[1] + 1e-12);
        REQUIRE(result.local_times[1] <= result.local_times[2] + 1e-12);
        REQUIRE(exact.mass_at(result.values[2]) > 0.0);
        finals.push_back(result.values[2]);
    }
    const auto emp = empirical_law(finals, exact, 1e-9);
    REQUIRE(emp.unmatched_mass == 0.0);
    REQUIRE(tv_distance(emp.law, exact) <= 0.03);
}

TEST_CASE("exact mode reproduces laws without touching a path") {
    SECTION("single coin") {
        const auto spec = make_random_walk_spec(1);
        const compiled_plans plans(spec);
        int upper = 0;
        const int n = 100000;
        for (int id = 0; id < n; ++id) {
            counter_stream stream(99, std::uint64_t(id));
            const auto values = exact_mode_sample(stream, spec, plans);
            REQUIRE(values.size() == 2);
            if (values[1] == 1.0) ++upper;
        }
        REQUIRE(double(upper) / n == Catch::Approx(0.5).margin(0.005));
    }
    SECTION("stopped walk at stage 10") {
        const auto spec = make_stopped_walk_spec(-3, 5, 10);
        const compiled_plans plans(spec);
        const auto exact = unconditional_law(spec, 10);
        const int n = 100000;
        std::vector<double> finals;
        finals.reserve(n);
        for (int id = 0; id < n; ++id) {
            counter_stream stream(99, std::uint64_t(id));
            finals.push_back(exact_mode_sample(stream, spec, plans).back());
        }
        const auto emp = empirical_law(finals, exact, 1e-9);
        REQUIRE(emp.unmatched_mass == 0.0);
        REQUIRE(tv_distance(emp.law, exact) <= 0.01);
    }
}

//============================ supermartingales ===============================

TEST_CASE("super plan for a point target is a pure drop") {
    const auto plan = build_super_plan(point_mass(0.875), 1.0);
    REQUIRE(plan.drop_level.has_value());
    REQUIRE(*plan.drop_level == 0.875);
    REQUIRE(!plan.split.has_value());
    REQUIRE(!plan.trivial());
    REQUIRE(tv_distance(super_plan_exact_law(plan, 1.0), point_mass(0.875)) == 0.0);

    const auto stay = build_super_plan(point_mass(1.0), 1.0);
    REQUIRE(stay.trivial());
}

TEST_CASE("super plan drops to the mean and then splits") {
    const auto target = make_distribution({{0.5, 0.5}, {1.25, 0.5}});
    const auto plan = build_super_plan(target, 1.0);
    REQUIRE(plan.drop_level.has_value());
    REQUIRE(*plan.drop_level == 0.875);
    REQUIRE(plan.split.has_value());
    REQUIRE(plan.split->center == 0.875);
    REQUIRE(plan.split->lower_mean == 0.5);
    REQUIRE(plan.split->upper_mean == 1.25);
    REQUIRE(plan.split->p_upper == 0.5);
    REQUIRE(plan.zero_atom_mass == 0.0);
}

TEST_CASE("super plan keeps zero atoms on an exact zero branch") {
    const auto target = make_distribution({{0.0, 0.5}, {2.0, 0.5}});
    const auto plan = build_super_plan(target, 1.0);
    REQUIRE(!plan.drop_level.has_value());  // the mean already matches
    REQUIRE(plan.split.has_value());
    REQUIRE(plan.split->lower_mean == 0.0);
    REQUIRE(plan.split->lower->center == 0.0);
    REQUIRE(plan.zero_atom_mass == 0.5);
}

TEST_CASE("super plan argument checks") {
    REQUIRE_THROWS_AS(build_super_plan(make_distribution({{2.0, 1.0}}), 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(build_super_plan(make_distribution({{-0.5, 0.5}, {1.0, 0.5}}), 1.0),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(build_super_plan(point_mass(0.5), -1.0), std::invalid_argument);
}

TEST_CASE("random super targets are realized exactly") {
    std::mt19937 rng(2718);
    for (int trial = 0; trial < 20; ++trial) {
        const double from = 0.5 + 0.1 * trial;
        const auto target = oracles::random_super_target(rng, from);
        const auto plan = build_super_plan(target, from);
        CAPTURE(trial, target.size());
        REQUIRE(tv_distance(super_plan_exact_law(plan, from), target) <= 1e-12);
    }
}

TEST_CASE("absorbed embedding of a constant supermartingale is immediate") {
    const auto spec = inline_super_spec(
        1.0, 2, {{{0, 1.0}, point_mass(1.0)}, {{1, 1.0}, point_mass(1.0)}});
    const compiled_super_plans plans(spec);
    brownian_path path(path_params(0, 1e-3, 10.0, 1.0));
    const auto result = embed_super_absorbed(path, spec, plans);
    REQUIRE(!result.hit_horizon);
    REQUIRE(!result.declared_absorbed);
    REQUIRE(result.values == std::vector<double>{1.0, 1.0, 1.0});
    REQUIRE(result.stopping_times == std::vector<double>{0.0, 0.0, 0.0});
    REQUIRE(path.steps_taken() == 0);
}

TEST_CASE("absorbed embedding splits a one-stage kernel correctly") {
    // Drop from 1 to 0.875, then exit [0.5, 1.25]: each leaf gets half.
    const auto spec = inline_super_spec(
        1.0, 1, {{{0, 1.0}, make_distribution({{0.5, 0.5}, {1.25, 0.5}})}});
    const compiled_super_plans plans(spec);
    const int n = 2000;
    int upper = 0, completed = 0;
    for (int id = 0; id < n; ++id) {
        brownian_path path(path_params(std::uint64_t(id), 1e-3, 500.0, 1.0));
        const auto result = embed_super_absorbed(path, spec, plans);
        if (result.hit_horizon) continue;  // the one-sided drop has a heavy tail
        ++completed;
        REQUIRE((result.values[1] == 0.5 || result.values[1] == 1.25));
        if (result.values[1] == 1.25) ++upper;
    }
    REQUIRE(completed > n * 95 / 100);
    REQUIRE(double(upper) / completed == Catch::Approx(0.5).margin(0.04));
}

TEST_CASE("absorption at zero is structural and sticky") {
    const auto spec = inline_super_spec(
        1.0, 2,
        {{{0, 1.0}, make_distribution({{0.0, 0.5}, {2.0, 0.5}})},
         {{1, 0.0}, point_mass(0.0)},
         {{1, 2.0}, make_distribution({{0.0, 0.5}, {4.0, 0.5}})}});
    REQUIRE(validate_spec(spec).empty());
    const compiled_super_plans plans(spec);
    const int n = 1000;
    int zero_at_1 = 0;
    for (int id = 0; id < n; ++id) {
        brownian_path path(path_params(std::uint64_t(id), 1e-3, 500.0, 1.0));
        const auto result = embed_super_absorbed(path, spec, plans);
        REQUIRE(!result.hit_horizon);  // both stages are two-sided exits
        if (result.values[1] == 0.0) {
            ++zero_at_1;
            REQUIRE(result.values[2] == 0.0);
            REQUIRE(result.stopping_times[2] == result.stopping_times[1]);
        }
        REQUIRE(result.local_times.size() == 3);
        REQUIRE(result.local_times[2] >= result.local_times[1] - 1e-12);
    }
    REQUIRE(double(zero_at_1) / n == Catch::Approx(0.5).margin(0.05));
}

TEST_CASE("geometric embedding declares absorption at the threshold") {
    const auto spec = inline_super_spec(
        1.0, 2, {{{0, 1.0}, point_mass(0.0)}, {{1, 0.0}, point_mass(0.0)}});
    const compiled_super_plans plans(spec);
    brownian_path path(path_params(5, 1e-3, 2000.0));  // starts at log(1) = 0
    const auto result = embed_super_gbm(path, spec, plans, 1e-4);
    REQUIRE(!result.hit_horizon);
    REQUIRE(result.declared_absorbed);
    REQUIRE(result.declared_stage == 1);
    REQUIRE(result.values == std::vector<double>{1.0, 0.0, 0.0});
    REQUIRE(std::isinf(result.stopping_times[1]));
    REQUIRE(std::isinf(result.stopping_times[2]));
    REQUIRE(path.gbm_value() < 1e-4);
}

TEST_CASE("geometric embedding splits the zero branch by declaration") {
    const auto spec = inline_super_spec(
        1.0, 1, {{{0, 1.0}, make_distribution({{0.0, 0.5}, {2.0, 0.5}})}});
    const compiled_super_plans plans(spec);
    const int n = 2000;
    int declared = 0, hit = 0;
    for (int id = 0; id < n; ++id) {
        brownian_path path(path_params(std::uint64_t(id), 1e-3, 400.0));
        const auto result = embed_super_gbm(path, spec, plans, 1e-4);
        REQUIRE(!result.hit_horizon);
        if (result.declared_absorbed) {
            ++declared;
            REQUIRE(result.values[1] == 0.0);
            REQUIRE(std::isinf(result.stopping_times[1]));
        } else {
            ++hit;
            REQUIRE(result.values[1] == 2.0);
            REQUIRE(std::isfinite(result.stopping_times[1]));
        }
    }
    REQUIRE(hit + declared == n);
    REQUIRE(double(hit) / n == Catch::Approx(0.5).margin(0.035));
}

TEST_CASE("both embeddings realize the same law") {
    const auto spec = make_multiplicative_spec(2);
    const auto exact = unconditional_law(spec, 2);
    const compiled_super_plans plans(spec);
    const int n = 1000;
    std::vector<double> absorbed_finals, gbm_finals;
    for (int id = 0; id < n; ++id) {
        brownian_path a(path_params(std::uint64_t(id), 1e-3, 500.0, 1.0));
        const auto ra = embed_super_absorbed(a, spec, plans);
        if (!ra.hit_horizon) absorbed_finals.push_back(ra.values[2]);
        brownian_path g(path_params(std::uint64_t(id) + n, 1e-3, 500.0));
        const auto rg = embed_super_gbm(g, spec, plans, 1e-4);
        if (!rg.hit_horizon && !rg.declared_absorbed) gbm_finals.push_back(rg.values[2]);
    }
    REQUIRE(absorbed_finals.size() > std::size_t(n * 9 / 10));
    REQUIRE(gbm_finals.size() > std::size_t(n * 9 / 10));
    const auto emp_a = empirical_law(absorbed_finals, exact, 1e-9);
    const auto emp_g = empirical_law(gbm_finals, exact, 1e-9);
    REQUIRE(emp_a.unmatched_mass == 0.0);
    REQUIRE(emp_g.unmatched_mass == 0.0);
    REQUIRE(tv_distance(emp_a.law, exact) <= 0.08);
    REQUIRE(tv_distance(emp_g.law, emp_a.law) <= 0.1);
}

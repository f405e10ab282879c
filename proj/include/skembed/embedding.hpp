#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "skembed/brownian_path.hpp"
#include "skembed/philox.hpp"
#include "skembed/process_spec.hpp"
#include "skembed/split_tree.hpp"

namespace skembed {

// Splitting plans for every kernel of a martingale spec, built once and then
// shared read-only across paths and worker threads.
class compiled_plans {
public:
    explicit compiled_plans(const process_spec& spec) {
        if (spec.kind != process_kind::martingale)
            throw std::invalid_argument("compiled_plans: spec must be a martingale");
        for (const auto& [key, kernel] : spec.kernels)
            trees_.emplace(key, build_split_tree(kernel, key.second));
    }

    const split_tree* find(int stage, double state) const {
        const auto it = trees_.find({stage, canonical_state(state)});
        return it == trees_.end() ? nullptr : &it->second;
    }

    const std::map<std::pair<int, double>, split_tree>& trees() const { return trees_; }

private:
    std::map<std::pair<int, double>, split_tree> trees_;
};

// Resolve one kernel on the path: descend the plan, running one two-sided
// exit per branch node. Returns the reached leaf value, or nothing if the
// horizon interrupts the descent.
inline std::optional<double> embed_step(brownian_path& path, const split_tree& tree) {
    const split_node* node = &tree;
    while (!node->is_leaf()) {
        const auto exit = first_exit(path, node->lower_mean, node->upper_mean);
        if (!exit) return std::nullopt;
        node = exit->side == exit_side::lower ? node->lower.get() : node->upper.get();
    }
    return node->center;
}

struct embedding_result {
    std::vector<double> stopping_times;  // T_0 .. T_k on the grid, non-decreasing
    std::vector<double> values;          // embedded chain values at those times
    std::vector<double> local_times;     // Tanaka estimate at each stopping time
    bool hit_horizon = false;
    int horizon_stage = -1;  // first stage that could not be completed
};

// Run the full nested construction for one path: stage after stage, each
// kernel is realized by its plan, and the stopping times, reached values and
// local-time readings are recorded. On horizon failure the partial prefix is
// kept and the result is flagged; callers exclude such paths from statistics
// and count them against the failure budget.
inline embedding_result embed_sequence(brownian_path& path, const process_spec& spec,
                                       const compiled_plans& plans) {
    embedding_result out;
    out.stopping_times.reserve(std::size_t(spec.n_max) + 1);
    out.values.reserve(std::size_t(spec.n_max) + 1);
    out.local_times.reserve(std::size_t(spec.n_max) + 1);

    double state = canonical_state(spec.root_value);
    if (path.value() != spec.root_value && path.value() != state)
        throw std::invalid_argument("embed_sequence: path must start at the spec root");
    out.stopping_times.push_back(path.time());
    out.values.push_back(state);
    out.local_times.push_back(path.local_time_tanaka_value());

    for (int n = 0; n < spec.n_max; ++n) {
        const split_tree* tree = plans.find(n, state);
        if (!tree)
            throw std::invalid_argument("embed_sequence: no plan for stage " + std::to_string(n) +
                                        ", state " + canonical_state_string(state));
        const auto leaf = embed_step(path, *tree);
        if (!leaf) {
            out.hit_horizon = true;
            out.horizon_stage = n;
            return out;
        }
        state = *leaf;
        out.stopping_times.push_back(path.time());
        out.values.push_back(state);
        out.local_times.push_back(path.local_time_tanaka_value());
    }
    return out;
}

// Reference sampler that never touches a Brownian path: walk the same plans,
// choosing each branch with its exact probability. Its output law is the
// plan's exact law, so it cross-checks the path-driven embedding end to end.
inline std::vector<double> exact_mode_sample(counter_stream& stream, const process_spec& spec,
                                             const compiled_plans& plans) {
    std::vector<double> values;
    values.reserve(std::size_t(spec.n_max) + 1);
    double state = canonical_state(spec.root_value);
    values.push_back(state);
    for (int n = 0; n < spec.n_max; ++n) {
        const split_tree* tree = plans.find(n, state);
        if (!tree)
            throw std::invalid_argument("exact_mode_sample: no plan for stage " + std::to_string(n) +
                                        ", state " + canonical_state_string(state));
        const split_node* node = tree;
        while (!node->is_leaf())
            node = stream.next_uniform() < node->p_upper ? node->upper.get() : node->lower.get();
        state = node->center;
        values.push_back(state);
    }
    return values;
}

}  // namespace skembed

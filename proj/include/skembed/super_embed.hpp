#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "skembed/brownian_path.hpp"
#include "skembed/process_spec.hpp"
#include "skembed/super_plan.hpp"

namespace skembed {

class compiled_super_plans {
public:
    explicit compiled_super_plans(const process_spec& spec) {
        if (spec.kind != process_kind::supermartingale)
            throw std::invalid_argument("compiled_super_plans: spec must be a supermartingale");
        for (const auto& [key, kernel] : spec.kernels)
            plans_.emplace(key, build_super_plan(kernel, key.second));
    }

    const super_plan* find(int stage, double state) const {
        const auto it = plans_.find({stage, canonical_state(state)});
        return it == plans_.end() ? nullptr : &it->second;
    }

private:
    std::map<std::pair<int, double>, super_plan> plans_;
};

struct super_embed_result {
    std::vector<double> stopping_times;  // +inf from the first declared stage on
    std::vector<double> values;
    std::vector<double> local_times;  // filled by the absorbed-mode embedding
    bool hit_horizon = false;
    int horizon_stage = -1;
    bool declared_absorbed = false;
    int declared_stage = -1;  // first index whose time is the +inf marker
};

namespace detail {

inline const super_plan& super_plan_at(const compiled_super_plans& plans, int stage, double state) {
    const super_plan* plan = plans.find(stage, state);
    if (!plan)
        throw std::invalid_argument("super embedding: no plan for stage " + std::to_string(stage) +
                                    ", state " + canonical_state_string(state));
    return *plan;
}

inline void fill_declared_tail(super_embed_result& out, int first_stage, int n_max) {
    out.declared_absorbed = true;
    out.declared_stage = first_stage;
    for (int k = first_stage; k <= n_max; ++k) {
        out.stopping_times.push_back(std::numeric_limits<double>::infinity());
        out.values.push_back(0.0);
    }
}

}  // namespace detail

// Supermartingale embedding in Brownian motion started at the root and
// absorbed at 0. Absorption is structural: a path that touches 0 lands on a
// zero leaf, and kernels at state 0 are point masses there, so it never moves
// again. All stopping times are genuine path times; no declared-absorption
// markers occur in this mode.
inline super_embed_result embed_super_absorbed(brownian_path& path, const process_spec& spec,
                                               const compiled_super_plans& plans) {
    super_embed_result out;
    out.stopping_times.reserve(std::size_t(spec.n_max) + 1);
    out.values.reserve(std::size_t(spec.n_max) + 1);

    double state = canonical_state(spec.root_value);
    out.stopping_times.push_back(path.time());
    out.values.push_back(state);
    out.local_times.push_back(path.local_time_tanaka_value());

    for (int n = 0; n < spec.n_max; ++n) {
        const super_plan& plan = detail::super_plan_at(plans, n, state);
        if (plan.drop_level) {
            if (!first_hit(path, *plan.drop_level)) {
                out.hit_horizon = true;
                out.horizon_stage = n;
                return out;
            }
            state = *plan.drop_level;
        }
        if (plan.split) {
            const split_node* node = &*plan.split;
            while (!node->is_leaf()) {
                const auto exit = first_exit(path, node->lower_mean, node->upper_mean);
                if (!exit) {
                    out.hit_horizon = true;
                    out.horizon_stage = n;
                    return out;
                }
                node = exit->side == exit_side::lower ? node->lower.get() : node->upper.get();
            }
            state = node->center;
        }
        out.stopping_times.push_back(path.time());
        out.values.push_back(state);
        out.local_times.push_back(path.local_time_tanaka_value());
    }
    return out;
}

// The same construction on the geometric view Z_t = exp(B_t - t/2), which is
// strictly positive: a plan step aiming at 0 can never complete, so once Z
// falls below `delta` the path is declared absorbed, its remaining values set
// to 0 and its remaining stopping times to the +inf marker. The declaration
// moves the realized conditional mean by at most delta. The path must start
// at log(root), so that Z_0 equals the root value.
inline super_embed_result embed_super_gbm(brownian_path& path, const process_spec& spec,
                                          const compiled_super_plans& plans, double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("embed_super_gbm: delta must be positive");
    if (!(spec.root_value > 0.0))
        throw std::invalid_argument("embed_super_gbm: root must be positive in the geometric view");

    super_embed_result out;
    out.stopping_times.reserve(std::size_t(spec.n_max) + 1);
    out.values.reserve(std::size_t(spec.n_max) + 1);

    double state = canonical_state(spec.root_value);
    out.stopping_times.push_back(path.time());
    out.values.push_back(state);

    for (int n = 0; n < spec.n_max; ++n) {
        const super_plan& plan = detail::super_plan_at(plans, n, state);
        if (plan.drop_level) {
            if (*plan.drop_level <= delta) {
                // Dropping (essentially) to 0 cannot complete in finite time;
                // wait for the declaration threshold instead.
                while (path.gbm_value() >= delta)
                    if (!path.step()) {
                        out.hit_horizon = true;
                        out.horizon_stage = n;
                        return out;
                    }
                detail::fill_declared_tail(out, n + 1, spec.n_max);
                return out;
            }
            if (!gbm_first_hit_below(path, *plan.drop_level)) {
                out.hit_horizon = true;
                out.horizon_stage = n;
                return out;
            }
            state = *plan.drop_level;
        }
        if (plan.split) {
            const split_node* node = &*plan.split;
            while (!node->is_leaf()) {
                if (node->lower_mean == 0.0) {
                    // Zero branch: only the upper barrier is reachable.
                    const auto hit = gbm_first_hit_above(path, node->upper_mean, delta);
                    if (!hit) {
                        out.hit_horizon = true;
                        out.horizon_stage = n;
                        return out;
                    }
                    if (hit->declared_absorbed) {
                        detail::fill_declared_tail(out, n + 1, spec.n_max);
                        return out;
                    }
                    node = node->upper.get();
                    continue;
                }
                const auto exit = gbm_first_exit(path, node->lower_mean, node->upper_mean);
                if (!exit) {
                    out.hit_horizon = true;
                    out.horizon_stage = n;
                    return out;
                }
                node = exit->side == exit_side::lower ? node->lower.get() : node->upper.get();
            }
            state = node->center;
        }
        out.stopping_times.push_back(path.time());
        out.values.push_back(state);
    }
    return out;
}

}  // namespace skembed

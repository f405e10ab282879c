#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "skembed/discrete_distribution.hpp"
#include "skembed/split_tree.hpp"

namespace skembed {

// Plan for one supermartingale kernel: first surrender the mean deficit by
// drifting down to the target mean (a one-sided hit, taken with probability
// one), then realize the target around that mean with the usual splitting
// plan. Point targets need no split; a target equal to the current state
// needs nothing at all. Zero atoms always sit in a lowest branch whose lower
// barrier is 0 exactly, so absorption at 0 is part of the plan's structure.
struct super_plan {
    std::optional<double> drop_level;  // target mean, when strictly below the state
    std::optional<split_tree> split;   // absent for point-mass targets
    double zero_atom_mass = 0.0;

    bool trivial() const { return !drop_level && !split; }
};

inline super_plan build_super_plan(const discrete_distribution& target, double from) {
    if (!(std::isfinite(from)) || from < 0.0)
        throw std::invalid_argument("build_super_plan: state must be finite and non-negative");
    if (target.min_value() < 0.0)
        throw std::invalid_argument("build_super_plan: supermartingale targets must be non-negative, found atom " +
                                    canonical_state_string(target.min_value()));
    const double m = target.mean();
    if (m > from + 1e-9)
        throw std::invalid_argument("build_super_plan: target mean " + canonical_state_string(m) +
                                    " exceeds state " + canonical_state_string(from));

    super_plan plan;
    plan.zero_atom_mass = target.mass_at(0.0);
    if (target.is_point()) {
        const double v = target.atoms()[0].value;
        if (std::fabs(v - from) > 1e-12) plan.drop_level = v;
        return plan;
    }
    if (m < from - 1e-12) plan.drop_level = m;
    plan.split = build_split_tree(target, m);
    return plan;
}

// Law the plan realizes from `from`: the drop is deterministic, so this is
// the split law, or a point mass when there is no split.
inline discrete_distribution super_plan_exact_law(const super_plan& plan, double from) {
    if (plan.split) return plan_exact_law(*plan.split);
    return point_mass(plan.drop_level ? *plan.drop_level : from);
}

}  // namespace skembed

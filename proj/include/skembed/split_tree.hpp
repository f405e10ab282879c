#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <stdexcept>
#include <vector>

#include "skembed/discrete_distribution.hpp"

namespace skembed {

// Binary splitting plan realizing a finite target law as nested two-sided
// exits. A branch node says: from `center`, wait for the first exit of
// [lower_mean, upper_mean]; the exit lands on lower_mean with probability
// 1 - p_upper and on upper_mean with probability p_upper, then the matching
// child takes over. Leaves are the target atoms. The gambler's-ruin exit
// probability (center - lower_mean)/(upper_mean - lower_mean) equals the
// target's conditional mass of the upper part exactly, which is what makes
// the construction exact rather than approximate.
struct split_node {
    double center = 0.0;
    double lower_mean = 0.0;
    double upper_mean = 0.0;
    double p_upper = 0.0;
    std::unique_ptr<split_node> lower;
    std::unique_ptr<split_node> upper;

    bool is_leaf() const { return lower == nullptr; }
};

using split_tree = split_node;

namespace detail {

inline std::unique_ptr<split_node> build_split_rec(const std::vector<atom>& atoms, double from) {
    auto node = std::make_unique<split_node>();
    if (atoms.size() == 1) {
        // Use the atom value itself, not the computed part mean: leaves must
        // match kernel states bit for bit so the next stage's lookup works.
        node->center = atoms[0].value;
        return node;
    }
    node->center = from;

    // Split at the conditional mean; the atom at the mean, if any, joins the
    // upper part. Both parts are non-empty: a one-sided law cannot have its
    // mean strictly inside its support.
    std::vector<atom> low, high;
    double low_sum = 0.0, low_mass = 0.0, high_sum = 0.0, high_mass = 0.0;
    for (const atom& a : atoms) {
        if (a.value < from) {
            low.push_back(a);
            low_sum += a.value * a.mass;
            low_mass += a.mass;
        } else {
            high.push_back(a);
            high_sum += a.value * a.mass;
            high_mass += a.mass;
        }
    }
    if (low.empty() || high.empty())
        throw std::invalid_argument("build_split_tree: degenerate split, atoms numerically indistinguishable");

    const double a = low_sum / low_mass;
    const double b = high_sum / high_mass;
    node->lower_mean = a;
    node->upper_mean = b;
    node->p_upper = (from - a) / (b - a);
    node->lower = build_split_rec(low, a);
    node->upper = build_split_rec(high, b);
    return node;
}

inline void collect_leaf_law(const split_node& node, double prob, std::map<double, double>& out) {
    if (node.is_leaf()) {
        out[canonical_state(node.center)] += prob;
        return;
    }
    collect_leaf_law(*node.lower, prob * (1.0 - node.p_upper), out);
    collect_leaf_law(*node.upper, prob * node.p_upper, out);
}

}  // namespace detail

// Build the splitting plan for a target law with mean `from`. Throws if the
// mean does not match within 1e-9.
inline split_tree build_split_tree(const discrete_distribution& target, double from) {
    if (std::fabs(target.mean() - from) > 1e-9)
        throw std::invalid_argument("build_split_tree: target mean " + canonical_state_string(target.mean()) +
                                    " does not match start value " + canonical_state_string(from));
    return std::move(*detail::build_split_rec(target.atoms(), from));
}

// Exact law the plan realizes: push 1 unit of mass through the branch
// probabilities down to the leaves. Agreement with the target is the
// correctness check for build_split_tree.
inline discrete_distribution plan_exact_law(const split_tree& tree) {
    std::map<double, double> acc;
    detail::collect_leaf_law(tree, 1.0, acc);
    std::vector<atom> atoms;
    atoms.reserve(acc.size());
    for (const auto& [v, m] : acc) atoms.push_back({v, m});
    return make_distribution(atoms);
}

inline int tree_depth(const split_tree& tree) {
    if (tree.is_leaf()) return 0;
    return 1 + std::max(tree_depth(*tree.lower), tree_depth(*tree.upper));
}

inline int tree_leaf_count(const split_tree& tree) {
    if (tree.is_leaf()) return 1;
    return tree_leaf_count(*tree.lower) + tree_leaf_count(*tree.upper);
}

}  // namespace skembed

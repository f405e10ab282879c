#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace skembed {

// Canonical representative of a real-valued state: round to 12 significant
// digits via the decimal round trip. Every module that keys on a state value
// (kernel lookup, atom merging, split-tree leaves) goes through this one
// function, so values that agree to 12 digits are the same state everywhere.
inline double canonical_state(double x) {
    if (x == 0.0) return 0.0;  // normalize -0
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return std::strtod(buf, nullptr);
}

inline std::string canonical_state_string(double x) {
    if (x == 0.0) return "0";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

struct atom {
    double value;
    double mass;
};

// A finite law on the reals: strictly increasing values, strictly positive
// masses summing to 1 up to 1e-12. Input masses may be off by up to 1e-9 in
// total; construction renormalizes so the stored object meets the tighter
// bound exactly.
class discrete_distribution {
public:
    const std::vector<atom>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    bool is_point() const { return atoms_.size() == 1; }
    double min_value() const { return atoms_.front().value; }
    double max_value() const { return atoms_.back().value; }
    double mean() const { return mean_; }
    double abs_mean() const { return abs_mean_; }

    // Mass at a single value (canonical comparison); 0 if absent.
    double mass_at(double value) const {
        const double key = canonical_state(value);
        for (const atom& a : atoms_)
            if (a.value == key) return a.mass;
        return 0.0;
    }

private:
    friend discrete_distribution make_distribution(const std::vector<atom>&);

    discrete_distribution(std::vector<atom> atoms, double mean, double abs_mean)
        : atoms_(std::move(atoms)), mean_(mean), abs_mean_(abs_mean) {}

    std::vector<atom> atoms_;
    double mean_;
    double abs_mean_;
};

inline discrete_distribution make_distribution(const std::vector<atom>& input) {
    if (input.empty()) throw std::invalid_argument("make_distribution: empty atom list");

    std::vector<atom> work;
    work.reserve(input.size());
    double total = 0.0;
    for (const atom& a : input) {
        if (!std::isfinite(a.value)) throw std::invalid_argument("make_distribution: non-finite value");
        if (!std::isfinite(a.mass) || a.mass < 0.0)
            throw std::invalid_argument("make_distribution: mass must be finite and non-negative");
        total += a.mass;
        if (a.mass > 0.0) work.push_back({canonical_state(a.value), a.mass});
    }
    if (work.empty()) throw std::invalid_argument("make_distribution: all masses are zero");
    if (std::fabs(total - 1.0) > 1e-9)
        throw std::invalid_argument("make_distribution: masses sum to " + std::to_string(total) +
                                    ", expected 1 within 1e-9");

    std::sort(work.begin(), work.end(), [](const atom& a, const atom& b) { return a.value < b.value; });

    // Merge canonically equal values, then renormalize to an exact unit sum.
    std::vector<atom> merged;
    merged.reserve(work.size());
    for (const atom& a : work) {
        if (!merged.empty() && merged.back().value == a.value)
            merged.back().mass += a.mass;
        else
            merged.push_back(a);
    }
    double mean = 0.0, abs_mean = 0.0;
    for (atom& a : merged) {
        a.mass /= total;
        mean += a.value * a.mass;
        abs_mean += std::fabs(a.value) * a.mass;
    }
    return discrete_distribution(std::move(merged), mean, abs_mean);
}

inline discrete_distribution point_mass(double value) {
    return make_distribution({{value, 1.0}});
}

}  // namespace skembed

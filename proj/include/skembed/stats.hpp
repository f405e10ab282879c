#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "skembed/discrete_distribution.hpp"

namespace skembed {

// Plain running mean/variance over a fixed iteration order. Aggregation
// always walks per-path records in path-id order, so results do not depend on
// worker count or scheduling.
class running_stat {
public:
    void add(double x) {
        ++n_;
        sum_ += x;
        sum_sq_ += x * x;
    }

    std::uint64_t n() const { return n_; }
    double mean() const { return n_ == 0 ? 0.0 : sum_ / double(n_); }

    double variance() const {
        if (n_ < 2) return 0.0;
        const double m = mean();
        const double v = (sum_sq_ - double(n_) * m * m) / double(n_ - 1);
        return v > 0.0 ? v : 0.0;
    }

    double se() const { return n_ == 0 ? 0.0 : std::sqrt(variance() / double(n_)); }

private:
    std::uint64_t n_ = 0;
    double sum_ = 0.0;
    double sum_sq_ = 0.0;
};

// Total variation distance between two finite laws, over the union of their
// supports: (1/2) sum |p - q|.
inline double tv_distance(const discrete_distribution& p, const discrete_distribution& q) {
    const auto& pa = p.atoms();
    const auto& qa = q.atoms();
    std::size_t i = 0, j = 0;
    double sum = 0.0;
    while (i < pa.size() || j < qa.size()) {
        if (j == qa.size() || (i < pa.size() && pa[i].value < qa[j].value)) {
            sum += pa[i++].mass;
        } else if (i == pa.size() || qa[j].value < pa[i].value) {
            sum += qa[j++].mass;
        } else {
            sum += std::fabs(pa[i++].mass - qa[j++].mass);
        }
    }
    return 0.5 * sum;
}

// Empirical law of a sample, snapped onto a reference support: a value within
// snap_tol of a support atom counts for that atom; anything else keeps its
// own (canonical) value and is tallied as unmatched mass. Unmatched atoms
// stay in the law, so a TV distance against the reference counts them fully.
struct empirical_law_result {
    discrete_distribution law;
    double unmatched_mass = 0.0;
};

inline empirical_law_result empirical_law(const std::vector<double>& values,
                                          const discrete_distribution& support, double snap_tol) {
    if (values.empty()) throw std::invalid_argument("empirical_law: empty sample");
    std::map<double, double> counts;
    std::uint64_t unmatched = 0;
    const auto& atoms = support.atoms();
    for (const double v : values) {
        // Support sizes here are tiny; a linear nearest scan is fine.
        double best_dist = snap_tol;
        const double* best = nullptr;
        for (const atom& a : atoms) {
            const double d = std::fabs(v - a.value);
            if (d <= best_dist) {
                best_dist = d;
                best = &a.value;
            }
        }
        if (best) {
            counts[*best] += 1.0;
        } else {
            counts[canonical_state(v)] += 1.0;
            ++unmatched;
        }
    }
    std::vector<atom> out;
    out.reserve(counts.size());
    for (const auto& [v, c] : counts) out.push_back({v, c / double(values.size())});
    return {make_distribution(out), double(unmatched) / double(values.size())};
}

// Standard normal CDF, for distributional tests.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace skembed

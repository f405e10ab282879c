#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "skembed/brownian_path.hpp"
#include "skembed/stats.hpp"

namespace skembed {

// Both local-time estimates at a fixed time t (rounded to the grid). The path
// may already be partially advanced, e.g. to a stopping time before t; it
// must not be past t. Returns nothing if t lies beyond the path horizon.
struct local_time_reading {
    double tanaka;
    double occupation;
    double time;
};

inline std::optional<local_time_reading> read_local_time(brownian_path& path, double t) {
    if (path.time() > t + 0.5 * path.dt())
        throw std::invalid_argument("read_local_time: path is already past the requested time");
    if (!path.advance_to(t)) return std::nullopt;
    return local_time_reading{path.local_time_tanaka_value(), path.local_time_occupation_value(), path.time()};
}

inline std::optional<double> local_time_tanaka(brownian_path& path, double t) {
    const auto r = read_local_time(path, t);
    if (!r) return std::nullopt;
    return r->tanaka;
}

inline std::optional<double> local_time_occupation(brownian_path& path, double t) {
    const auto r = read_local_time(path, t);
    if (!r) return std::nullopt;
    return r->occupation;
}

// Monte Carlo check of an identity E[lhs] = E[rhs] from paired per-path
// samples. Means and their standard errors are reported per side; the pass
// criterion uses the paired standard error of the difference, which is the
// honest scale for the gap, plus a small absolute allowance for
// discretization bias.
struct identity_record {
    double lhs_mean = 0.0;
    double lhs_se = 0.0;
    double rhs_mean = 0.0;
    double rhs_se = 0.0;
    double diff_se = 0.0;
    std::uint64_t n = 0;

    double gap() const { return lhs_mean - rhs_mean; }
    bool pass(double se_multiplier, double allowance) const {
        return std::fabs(gap()) <= se_multiplier * diff_se + allowance;
    }
};

inline identity_record make_identity_record(const std::vector<double>& lhs, const std::vector<double>& rhs) {
    if (lhs.size() != rhs.size())
        throw std::invalid_argument("make_identity_record: sides must be paired");
    running_stat l, r, d;
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        l.add(lhs[i]);
        r.add(rhs[i]);
        d.add(lhs[i] - rhs[i]);
    }
    identity_record rec;
    rec.lhs_mean = l.mean();
    rec.lhs_se = l.se();
    rec.rhs_mean = r.mean();
    rec.rhs_se = r.se();
    rec.diff_se = d.se();
    rec.n = l.n();
    return rec;
}

}  // namespace skembed

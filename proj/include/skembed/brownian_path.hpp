#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "skembed/philox.hpp"

namespace skembed {

// The raw driving noise: N(0, dt) increments from one path's substream.
class increment_stream {
public:
    increment_stream(std::uint64_t seed, std::uint64_t path_id, double dt)
        : stream_(seed, path_id), sqrt_dt_(std::sqrt(dt)) {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("increment_stream: dt must be positive");
    }
    double next() { return sqrt_dt_ * stream_.next_gaussian(); }

private:
    counter_stream stream_;
    double sqrt_dt_;
};

enum class exit_side { lower, upper };

struct exit_result {
    double time;      // grid time of the exit step
    double value;     // exact barrier value (snapped)
    exit_side side;
};

// Euler grid simulation of Brownian motion with the two running functionals
// the checks need: the Tanaka-style local time estimate at 0 and the
// occupation time of the band |B| <= epsilon. Steps are split into a proposal
// (draws the increment) and a commit (fixes where the step actually landed),
// so barrier logic can snap the landing point onto a barrier and keep every
// accumulator consistent with the committed trajectory.
class brownian_path {
public:
    struct params {
        std::uint64_t seed = 0;
        std::uint64_t path_id = 0;
        double dt = 1e-4;
        double t_max = 300.0;
        double start = 0.0;
        double band_epsilon = 0.0;  // <= 0 means the default 2*sqrt(dt)
        bool bridge_correction = true;
    };

    explicit brownian_path(const params& p)
        : stream_(p.seed, p.path_id),
          dt_(p.dt),
          sqrt_dt_(std::sqrt(p.dt)),
          value_(p.start),
          start_abs_(std::fabs(p.start)),
          band_epsilon_(p.band_epsilon > 0.0 ? p.band_epsilon : 2.0 * std::sqrt(p.dt)),
          bridge_(p.bridge_correction) {
        if (!(p.dt > 0.0) || !std::isfinite(p.dt)) throw std::invalid_argument("brownian_path: dt must be positive");
        if (!(p.t_max >= p.dt)) throw std::invalid_argument("brownian_path: t_max must be at least dt");
        if (!std::isfinite(p.start)) throw std::invalid_argument("brownian_path: start must be finite");
        max_steps_ = std::uint64_t(p.t_max / p.dt + 1e-9);
    }

    double dt() const { return dt_; }
    double time() const { return double(step_) * dt_; }
    double value() const { return value_; }
    double band_epsilon() const { return band_epsilon_; }
    bool bridge_correction() const { return bridge_; }
    bool at_horizon() const { return step_ >= max_steps_; }
    std::uint64_t steps_taken() const { return step_; }

    // Tanaka estimate of the local time at 0 up to the current time:
    // |B_t| - |B_0| minus the accumulated sgn(B_i)(B_{i+1} - B_i), sgn(0) = -1.
    double local_time_tanaka_value() const { return std::fabs(value_) - start_abs_ - tanaka_sum_; }

    // Occupation estimate: time spent with |B| <= epsilon, over 2 epsilon.
    double local_time_occupation_value() const { return band_time_ / (2.0 * band_epsilon_); }

    // Geometric view of the same path: Z_t = exp(B_t - t/2).
    double gbm_value() const { return std::exp(value_ - 0.5 * time()); }

    // Propose the next grid value; must be followed by exactly one commit.
    double propose() {
        pending_ = true;
        return value_ + sqrt_dt_ * stream_.next_gaussian();
    }

    // Land the step at `landed` (the proposal, or a barrier it was snapped
    // to). Accumulators use the pre-step value as the left endpoint.
    void commit(double landed) {
        if (!pending_) throw std::logic_error("brownian_path: commit without a proposal");
        pending_ = false;
        if (std::fabs(value_) <= band_epsilon_) band_time_ += dt_;
        tanaka_sum_ += (value_ > 0.0 ? 1.0 : -1.0) * (landed - value_);
        value_ = landed;
        ++step_;
    }

    // Plain step with no barriers; false once the horizon is reached.
    bool step() {
        if (at_horizon()) return false;
        commit(propose());
        return true;
    }

    // Advance on the grid until time t (rounded to the nearest grid point).
    // Returns false if the horizon cuts the advance short.
    bool advance_to(double t) {
        const auto target = std::uint64_t(t / dt_ + 0.5);
        while (step_ < target)
            if (!step()) return false;
        return true;
    }

    double next_uniform() { return stream_.next_uniform(); }

    // One-step crossing probability of barrier c between the committed value
    // and an uncrossed proposal, from the Brownian bridge over the step. The
    // exponent gate skips exp() and the uniform draw when the answer is
    // numerically indistinguishable from 0, which also keeps the variate
    // consumption deterministic given the trajectory.
    bool bridge_crossed(double proposal, double c) {
        const double e = -2.0 * (value_ - c) * (proposal - c) / dt_;
        if (e <= -40.0) return false;
        return next_uniform() < std::exp(e);
    }

private:
    counter_stream stream_;
    double dt_;
    double sqrt_dt_;
    double value_;
    double start_abs_;
    double band_epsilon_;
    bool bridge_;
    std::uint64_t step_ = 0;
    std::uint64_t max_steps_ = 0;
    double tanaka_sum_ = 0.0;
    double band_time_ = 0.0;
    bool pending_ = false;
};

// First exit from [lower, upper] starting at the current value, which must
// lie inside the interval. The exit value is snapped exactly onto the
// barrier, and the path commits the snapped value so later accumulators see
// the same trajectory the caller does. Returns nothing if the horizon is
// reached first (the path is then parked at the horizon).
inline std::optional<exit_result> first_exit(brownian_path& path, double lower, double upper) {
    if (!(lower < upper)) throw std::invalid_argument("first_exit: interval must satisfy lower < upper");
    const double x0 = path.value();
    if (x0 < lower || x0 > upper)
        throw std::invalid_argument("first_exit: start value lies outside the interval");
    if (x0 == lower) return exit_result{path.time(), lower, exit_side::lower};
    if (x0 == upper) return exit_result{path.time(), upper, exit_side::upper};

    const bool bridge = path.bridge_correction();
    while (!path.at_horizon()) {
        const double x = path.value();
        const double p = path.propose();
        if (p <= lower) {
            path.commit(lower);
            return exit_result{path.time(), lower, exit_side::lower};
        }
        if (p >= upper) {
            path.commit(upper);
            return exit_result{path.time(), upper, exit_side::upper};
        }
        if (bridge) {
            // Check the nearer barrier only; the other is exponentially
            // farther in the bridge probability.
            const double da = std::min(x - lower, p - lower);
            const double db = std::min(upper - x, upper - p);
            const double c = da <= db ? lower : upper;
            if (path.bridge_crossed(p, c)) {
                path.commit(c);
                return exit_result{path.time(), c, c == lower ? exit_side::lower : exit_side::upper};
            }
        }
        path.commit(p);
    }
    return std::nullopt;
}

// First hit of a single level from either side, snapped onto the level.
inline std::optional<double> first_hit(brownian_path& path, double level) {
    const double x0 = path.value();
    if (x0 == level) return path.time();
    const bool from_above = x0 > level;
    const bool bridge = path.bridge_correction();
    while (!path.at_horizon()) {
        const double p = path.propose();
        const bool crossed = from_above ? p <= level : p >= level;
        if (crossed || (bridge && path.bridge_crossed(p, level))) {
            path.commit(level);
            return path.time();
        }
        path.commit(p);
    }
    return std::nullopt;
}

//===================== geometric (exponential) barriers ======================
//
// For Z_t = exp(B_t - t/2), the event Z = z is the moving line
// B = log(z) + t/2. Each step uses the line's position at the step's right
// endpoint for both the crossing test and the bridge correction; the line
// moves dt/2 per step, far below the noise scale sqrt(dt).

struct gbm_exit_result {
    double time;
    double z_value;   // exact barrier level in Z space
    exit_side side;
};

// First time Z falls to z_level (from above). Commits B exactly onto the
// line, so the recorded Z value is the requested level.
inline std::optional<double> gbm_first_hit_below(brownian_path& path, double z_level) {
    if (!(z_level > 0.0)) throw std::invalid_argument("gbm_first_hit_below: level must be positive");
    const double log_level = std::log(z_level);
    if (path.gbm_value() <= z_level) return path.time();
    const bool bridge = path.bridge_correction();
    while (!path.at_horizon()) {
        const double x = path.value();
        const double p = path.propose();
        const double c = log_level + 0.5 * (path.time() + path.dt());
        if (p <= c || x <= c || (bridge && path.bridge_crossed(p, c))) {
            path.commit(c);
            return path.time();
        }
        path.commit(p);
    }
    return std::nullopt;
}

// First exit of Z from [z_lower, z_upper], both positive, starting inside.
inline std::optional<gbm_exit_result> gbm_first_exit(brownian_path& path, double z_lower, double z_upper) {
    if (!(0.0 < z_lower && z_lower < z_upper))
        throw std::invalid_argument("gbm_first_exit: need 0 < z_lower < z_upper");
    const double z0 = path.gbm_value();
    if (z0 <= z_lower) return gbm_exit_result{path.time(), z_lower, exit_side::lower};
    if (z0 >= z_upper) return gbm_exit_result{path.time(), z_upper, exit_side::upper};
    const double log_lo = std::log(z_lower), log_hi = std::log(z_upper);
    const bool bridge = path.bridge_correction();
    while (!path.at_horizon()) {
        const double x = path.value();
        const double p = path.propose();
        const double shift = 0.5 * (path.time() + path.dt());
        const double ca = log_lo + shift, cb = log_hi + shift;
        if (p <= ca || x <= ca) {
            path.commit(ca);
            return gbm_exit_result{path.time(), z_lower, exit_side::lower};
        }
        if (p >= cb) {
            path.commit(cb);
            return gbm_exit_result{path.time(), z_upper, exit_side::upper};
        }
        if (bridge) {
            const double da = std::min(x - ca, p - ca);
            const double db = std::min(cb - x, cb - p);
            const double c = da <= db ? ca : cb;
            if (path.bridge_crossed(p, c)) {
                path.commit(c);
                return gbm_exit_result{path.time(), c == ca ? z_lower : z_upper,
                                       c == ca ? exit_side::lower : exit_side::upper};
            }
        }
        path.commit(p);
    }
    return std::nullopt;
}

// Upward hit of z_upper with a declared-absorption floor: once Z drops below
// z_floor the path is declared absorbed at 0 (its continuation can move the
// conditional mean by at most z_floor). No bridge test on the floor; it is a
// declaration threshold, not a barrier of the construction.
struct gbm_hit_or_floor {
    bool declared_absorbed;
    double time;
};

inline std::optional<gbm_hit_or_floor> gbm_first_hit_above(brownian_path& path, double z_upper, double z_floor) {
    if (!(0.0 < z_floor && z_floor < z_upper))
        throw std::invalid_argument("gbm_first_hit_above: need 0 < z_floor < z_upper");
    if (path.gbm_value() >= z_upper) return gbm_hit_or_floor{false, path.time()};
    if (path.gbm_value() < z_floor) return gbm_hit_or_floor{true, path.time()};
    const double log_hi = std::log(z_upper), log_floor = std::log(z_floor);
    const bool bridge = path.bridge_correction();
    while (!path.at_horizon()) {
        const double p = path.propose();
        const double shift = 0.5 * (path.time() + path.dt());
        const double cb = log_hi + shift;
        if (p >= cb || (bridge && path.bridge_crossed(p, cb))) {
            path.commit(cb);
            return gbm_hit_or_floor{false, path.time()};
        }
        path.commit(p);
        if (p < log_floor + shift) return gbm_hit_or_floor{true, path.time()};
    }
    return std::nullopt;
}

}  // namespace skembed

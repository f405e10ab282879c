// Compare the two local-time estimators at t = 1 and show the identity
// E[L_t] = E|B_t| emerging from the Monte Carlo means.

#include <cmath>
#include <cstdio>

#include "skembed/local_time.hpp"

int main() {
    using namespace skembed;
    const int paths = 20000;
    const double dt = 1e-3, t = 1.0;

    running_stat tanaka, occupation, abs_b;
    for (std::uint64_t id = 0; id < paths; ++id) {
        brownian_path path({/*seed=*/11, id, dt, /*t_max=*/2.0});
        const auto reading = read_local_time(path, t);
        tanaka.add(reading->tanaka);
        occupation.add(reading->occupation);
        abs_b.add(std::fabs(path.value()));
    }

    std::printf("t = %g, dt = %g, %d paths\n", t, dt, paths);
    std::printf("  E[L_t]  (Tanaka)      = %.4f +- %.4f\n", tanaka.mean(), tanaka.se());
    std::printf("  E[L_t]  (occupation)  = %.4f +- %.4f\n", occupation.mean(), occupation.se());
    std::printf("  E|B_t|  (direct)      = %.4f +- %.4f\n", abs_b.mean(), abs_b.se());
    std::printf("  sqrt(2t/pi)           = %.4f\n", std::sqrt(2.0 * t / M_PI));
    return 0;
}

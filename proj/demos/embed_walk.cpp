// Embed a +-1 walk stopped at {-3, 5} into Brownian motion and print a few
// sample trajectories of the embedded chain, then the empirical law at the
// final stage against the exact law.

#include <cstdio>
#include <map>

#include "skembed/embedding.hpp"
#include "skembed/process_spec.hpp"

int main() {
    using namespace skembed;
    const process_spec spec = make_stopped_walk_spec(-3, 5, 10);
    const compiled_plans plans(spec);

    std::printf("embedded trajectories (value @ stopping time):\n");
    for (std::uint64_t id = 0; id < 4; ++id) {
        brownian_path path({/*seed=*/7, id, /*dt=*/1e-3, /*t_max=*/300.0});
        const embedding_result r = embed_sequence(path, spec, plans);
        std::printf("  path %llu: ", static_cast<unsigned long long>(id));
        for (std::size_t n = 0; n < r.values.size(); ++n)
            std::printf("%+g@%.2f ", r.values[n], r.stopping_times[n]);
        std::printf("\n");
    }

    const int paths = 20000;
    std::map<double, int> counts;
    int failures = 0;
    for (std::uint64_t id = 0; id < paths; ++id) {
        brownian_path path({7, 1000 + id, 1e-3, 300.0});
        const embedding_result r = embed_sequence(path, spec, plans);
        if (r.hit_horizon) {
            ++failures;
            continue;
        }
        counts[r.values.back()] += 1;
    }

    const discrete_distribution exact = unconditional_law(spec, spec.n_max);
    std::printf("\nlaw at stage %d (%d paths, %d horizon failures):\n", spec.n_max, paths, failures);
    std::printf("  %8s %12s %12s\n", "value", "empirical", "exact");
    for (const auto& [v, c] : counts)
        std::printf("  %8g %12.5f %12.5f\n", v, double(c) / double(paths - failures), exact.mass_at(v));
    return 0;
}

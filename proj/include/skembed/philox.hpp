#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace skembed {

// Philox 4x32-10 block function (Salmon et al., SC 2011): a 10-round bijective
// mix of a 128-bit counter under a 64-bit key. Stateless, so any block of the
// stream can be produced in O(1). Constants are the reference ones.
struct philox4x32 {
    using counter_type = std::array<std::uint32_t, 4>;
    using key_type = std::array<std::uint32_t, 2>;

    static constexpr std::uint32_t weyl_a = 0x9E3779B9u;
    static constexpr std::uint32_t weyl_b = 0xBB67AE85u;
    static constexpr std::uint32_t mul_a = 0xD2511F53u;
    static constexpr std::uint32_t mul_b = 0xCD9E8D57u;

    static counter_type block(counter_type ctr, key_type key) {
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t(mul_a) * ctr[0];
            const std::uint64_t p1 = std::uint64_t(mul_b) * ctr[2];
            const counter_type next = {
                std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0],
                std::uint32_t(p1),
                std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1],
                std::uint32_t(p0),
            };
            ctr = next;
            key[0] += weyl_a;
            key[1] += weyl_b;
        }
        return ctr;
    }
};

namespace detail {

// Ziggurat tables for the standard normal, Doornik's ZIGNOR layout with 128
// layers. ratio[i] = x[i+1]/x[i] gives the rejection-free rectangle test.
struct ziggurat_tables {
    static constexpr int layers = 128;
    static constexpr double tail_x = 3.442619855899;
    static constexpr double layer_area = 9.91256303526217e-3;

    std::array<double, layers + 1> x{};
    std::array<double, layers> ratio{};

    ziggurat_tables() {
        x[0] = layer_area / std::exp(-0.5 * tail_x * tail_x);
        x[1] = tail_x;
        x[layers] = 0.0;
        for (int i = 2; i < layers; ++i) {
            const double prev = x[i - 1];
            x[i] = std::sqrt(-2.0 * std::log(layer_area / prev + std::exp(-0.5 * prev * prev)));
        }
        for (int i = 0; i < layers; ++i) ratio[i] = x[i + 1] / x[i];
    }

    static const ziggurat_tables& get() {
        static const ziggurat_tables tables;
        return tables;
    }
};

}  // namespace detail

// Deterministic random substream for one simulated path. The key holds the
// experiment seed, counter words 2..3 hold the path id and words 0..1 the
// block index, so distinct (seed, path_id) pairs can never overlap no matter
// how many variates each path consumes. Consumption order within a stream is
// part of the reproducibility contract: replaying the same calls replays the
// same values, independent of what other paths do.
class counter_stream {
public:
    counter_stream(std::uint64_t seed, std::uint64_t path_id)
        : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)},
          pid_lo_(std::uint32_t(path_id)),
          pid_hi_(std::uint32_t(path_id >> 32)) {}

    std::uint64_t next_u64() {
        if (buffered_ == 0) refill();
        return buffer_[--buffered_];
    }

    // Uniform on the open interval (0,1); never returns 0 or 1, so callers
    // may take logs without guards.
    double next_uniform() { return (double(next_u64() >> 11) + 0.5) * 0x1p-53; }

    // Standard normal via the ziggurat. The fast path spends one 64-bit draw:
    // low 7 bits pick the layer, the top 53 bits make a signed uniform, and
    // the two are disjoint bit ranges so they are independent.
    double next_gaussian() {
        const auto& z = detail::ziggurat_tables::get();
        for (;;) {
            const std::uint64_t bits = next_u64();
            const int i = int(bits & 0x7F);
            const double u = (double(bits >> 11) + 0.5) * 0x1p-52 - 1.0;
            if (std::fabs(u) < z.ratio[i]) return u * z.x[i];
            if (i == 0) return tail_sample(u < 0.0);
            const double cand = u * z.x[i];
            const double f0 = std::exp(-0.5 * (z.x[i] * z.x[i] - cand * cand));
            const double f1 = std::exp(-0.5 * (z.x[i + 1] * z.x[i + 1] - cand * cand));
            if (f1 + next_uniform() * (f0 - f1) < 1.0) return cand;
        }
    }

private:
    void refill() {
        const philox4x32::counter_type ctr = {
            std::uint32_t(block_index_),
            std::uint32_t(block_index_ >> 32),
            pid_lo_,
            pid_hi_,
        };
        const auto out = philox4x32::block(ctr, key_);
        buffer_[0] = (std::uint64_t(out[1]) << 32) | out[0];
        buffer_[1] = (std::uint64_t(out[3]) << 32) | out[2];
        ++block_index_;
        buffered_ = 2;
    }

    // Exact tail sample beyond tail_x (Marsaglia's method).
    double tail_sample(bool negative) {
        constexpr double r = detail::ziggurat_tables::tail_x;
        double xx, yy;
        do {
            xx = std::log(next_uniform()) / r;
            yy = std::log(next_uniform());
        } while (-2.0 * yy < xx * xx);
        return negative ? xx - r : r - xx;
    }

    philox4x32::key_type key_;
    std::uint32_t pid_lo_, pid_hi_;
    std::uint64_t block_index_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int buffered_ = 0;
};

// SplitMix64 finalizer; used to derive sub-seeds (e.g. the two runs of a
// cross-check) from one experiment seed without overlapping streams.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace skembed

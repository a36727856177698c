#pragma once

#include <cstdint>
#include <initializer_list>

namespace chaosgen {

// Deterministic counter-free stream RNG built on splitmix64. All randomness in
// the project flows through streams derived from (master seed, path of ids),
// so results are reproducible across runs and independent of thread schedule.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform integer in [0, n)
    std::uint64_t next_below(std::uint64_t n);

    // standard normal via Box-Muller
    double normal();

private:
    std::uint64_t state_;
};

// Hashes a seed together with a path of ids into a new stream seed.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

// Stream purpose tags used when deriving per-use sub-streams.
namespace stream {
inline constexpr std::uint64_t init_fixed = 1;   // fixed coupling matrices
inline constexpr std::uint64_t free_chain = 2;   // free-run chain initial conditions
inline constexpr std::uint64_t minibatch = 3;    // per-epoch minibatch draw
inline constexpr std::uint64_t clamp_h0 = 4;     // clamped-phase hidden initial conditions
inline constexpr std::uint64_t negative = 5;     // negative-phase free runs
inline constexpr std::uint64_t eval_gen = 6;     // evaluation sample generation
inline constexpr std::uint64_t eval_data = 7;    // evaluation data subset
inline constexpr std::uint64_t recon = 8;        // reconstruction initial conditions
inline constexpr std::uint64_t probe = 9;        // chaos probe perturbation
}  // namespace stream

}  // namespace chaosgen

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace tubeplan {

inline uint64_t splitmix64(uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Derives an independent stream seed from (master, a, b). Used to key one RNG
// per (env, record) so parallel generation is schedule-independent.
inline uint64_t substream(uint64_t master, uint64_t a, uint64_t b = 0) {
    uint64_t s = master;
    uint64_t h = splitmix64(s);
    s ^= (a + 1) * 0x9e3779b97f4a7c15ull;
    h ^= splitmix64(s);
    s ^= (b + 1) * 0xbf58476d1ce4e5b9ull;
    h ^= splitmix64(s);
    return h;
}

// mt19937_64 with hand-rolled uniform/normal transforms. The engine's output
// sequence is pinned by the standard, and our transforms avoid the
// implementation-defined std distributions, so streams are reproducible.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t raw() { return eng_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

    // inclusive range
    int uniform_int(int lo, int hi) {
        int n = hi - lo + 1;
        int k = static_cast<int>(uniform() * n);
        if (k >= n) k = n - 1;
        return lo + k;
    }

    // Box-Muller; generates pairs and caches the spare.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace tubeplan

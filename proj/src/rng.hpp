#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace p3m {

// Seeded RNG used everywhere randomness is needed. Distributions are done by
// hand on top of mt19937_64 so the draw stream does not depend on the
// standard library's distribution internals.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // [0, 1)
    double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n)
    int uniform_int(int n) {
        // rejection sampling keeps the draw unbiased
        uint64_t limit = UINT64_MAX - UINT64_MAX % static_cast<uint64_t>(n);
        uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return static_cast<int>(x % static_cast<uint64_t>(n));
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Box-Muller with cached spare
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    std::string serialize() const {
        std::ostringstream os;
        os << engine_ << ' ' << (has_spare_ ? 1 : 0) << ' ';
        os.precision(17);
        os << spare_;
        return os.str();
    }

    static Rng deserialize(const std::string& s) {
        Rng r;
        std::istringstream is(s);
        int spare_flag = 0;
        is >> r.engine_ >> spare_flag >> r.spare_;
        r.has_spare_ = spare_flag != 0;
        return r;
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace p3m

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace trilead {

// Counter-based 64-bit generator (splitmix64 finalizer over key + counter).
// Streams derived with split() are independent of the parent's draw position,
// so every stochastic op can take its own stream and stay reproducible no
// matter what ran before it.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : key_(mix(seed ^ 0xD1B54A32D192ED03ull)) {}

    // Derive an independent stream; deterministic in (key, stream id).
    Rng split(std::uint64_t stream) const {
        return Rng(raw{}, mix(key_ ^ mix(stream * 0x9E3779B97F4A7C15ull + 0x632BE59BD9B4E019ull)));
    }

    std::uint64_t next_u64() { return mix(key_ + 0x9E3779B97F4A7C15ull * ++counter_); }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n).
    int next_int(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

    // Standard normal via Box-Muller; second value cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Fisher-Yates; hand-rolled so the permutation is stable across platforms.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next_u64() % i);
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    struct raw {};
    Rng(raw, std::uint64_t key) : key_(key) {}

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace trilead

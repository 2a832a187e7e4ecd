#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace lfopt {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t hash_combine(uint64_t seed, uint64_t v) {
    return splitmix64(seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

inline uint64_t hash_str(std::string_view s, uint64_t seed = 0x243f6a8885a308d3ULL) {
    uint64_t h = seed;
    for (char c : s) h = hash_combine(h, static_cast<uint64_t>(static_cast<unsigned char>(c)));
    return h;
}

// Deterministic xoshiro256** generator. All stochastic modules derive their
// stream from a single run seed so results are reproducible across platforms
// (std::uniform_*_distribution is implementation-defined; this is not).
class Rng {
public:
    explicit Rng(uint64_t seed = 0) {
        uint64_t x = seed;
        for (auto& w : state_) w = x = splitmix64(x);
    }

    // Independent child stream, e.g. rng.derive("mutate").
    Rng derive(std::string_view stream) const {
        uint64_t h = hash_str(stream);
        for (auto w : state_) h = hash_combine(h, w);
        return Rng(h);
    }
    Rng derive(std::string_view stream, uint64_t id) const {
        return Rng(hash_combine(derive(stream).state_[0], id));
    }

    uint64_t next() {
        auto rotl = [](uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
        uint64_t result = rotl(state_[1] * 5, 7) * 9;
        uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, n) without modulo bias.
    uint64_t below(uint64_t n) {
        if (n <= 1) return 0;
        uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % n);
        uint64_t v = next();
        while (v >= limit) v = next();
        return v % n;
    }

    // Uniform in [lo, hi] inclusive.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo + 1)));
    }

    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool coin(double p) { return uniform01() < p; }

    template <typename T>
    const T& pick(const std::vector<T>& v) {
        return v[below(v.size())];
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = below(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_[4];
};

} // namespace lfopt

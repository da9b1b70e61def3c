#include "dbmm/core/rng.hpp"

#include <cmath>
#include <stdexcept>

#include "dbmm/core/errors.hpp"
#include "dbmm/core/special.hpp"

namespace dbmm {

namespace {

inline uint64_t rotl64(uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

// splitmix64 finalizer (Steele/Lea/Flood mixing constants). Used both to
// expand a seed into xoshiro state and to hash stream identities.
inline uint64_t mix64(uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace

RngStream::RngStream(uint64_t seed, uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
    // Fold seed and stream id into a splitmix chain and draw the four
    // xoshiro words from it.
    uint64_t x = mix64(seed) ^ rotl64(mix64(stream_id ^ 0xA3C59AC2F0B2D1E4ull), 32);
    for (auto& w : s_) {
        x += 0x9E3779B97F4A7C15ull;
        uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        w = z ^ (z >> 31);
    }
    // All-zero state would lock xoshiro at zero forever. Unreachable in
    // practice after mixing, but cheap to rule out.
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

uint64_t RngStream::next_u64() {
    const uint64_t result = rotl64(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl64(s_[3], 45);
    return result;
}

double RngStream::uniform01() {
    // 53 random bits, centered in the bin: ((k + 0.5) / 2^53) lies strictly
    // inside (0, 1) for every k in [0, 2^53).
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
    return inverse_normal_cdf(uniform01());
}

double RngStream::normal(double mean, double stddev) {
    return mean + stddev * normal();
}

uint64_t RngStream::uniform_int(uint64_t n) {
    if (n == 0) throw IndexError("uniform_int: n must be >= 1");
    // Rejection to kill modulo bias.
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

int RngStream::categorical(const std::vector<double>& probs) {
    if (probs.empty()) throw EmptyInput("categorical: empty probability vector");
    const double u = uniform01();
    double acc = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u <= acc) return static_cast<int>(i);
    }
    // Floating-point slack: total mass summed to slightly below u.
    return static_cast<int>(probs.size()) - 1;
}

RngStream RngStream::split(uint64_t i) const {
    // Child identity is a hash of (stream_id, i); the seed is carried
    // through so different master seeds never collide with each other.
    uint64_t child = mix64(stream_id_ ^ rotl64(mix64(i), 17) ^ 0x6C62272E07BB0142ull);
    return RngStream(seed_, child);
}

} // namespace dbmm

#pragma once

#include <cstdint>
#include <vector>

namespace dbmm {

// Counter-addressed random stream with value semantics.
//
// A stream is identified by (seed, stream_id). Copying an RngStream copies
// its position, so passing one *by value* into a function gives that
// function a private replayable sequence: calling the function twice with
// the same stream value produces bit-identical draws. That property is what
// lets finite-difference checks of Monte-Carlo losses reuse the exact same
// noise for f(x+h) and f(x-h).
//
// split(i) derives an independent child stream from the parent's *identity*
// (seed, stream_id, i), not from its current position, so the layout of a
// seeding tree is stable no matter how many draws the parent has made.
//
// The generator behind each stream is xoshiro256++ seeded via splitmix64.
class RngStream {
public:
    RngStream() : RngStream(0, 0) {}
    explicit RngStream(uint64_t seed, uint64_t stream_id = 0);

    uint64_t seed() const { return seed_; }
    uint64_t stream_id() const { return stream_id_; }

    // Next raw 64 random bits.
    uint64_t next_u64();

    // Uniform on the open interval (0, 1); never returns 0.0 or 1.0.
    double uniform01();

    // Standard normal via inverse-CDF transform of uniform01(). One draw
    // consumes exactly one uniform, which keeps streams alignable.
    double normal();
    double normal(double mean, double stddev);

    // Uniform integer in [0, n). n must be >= 1.
    uint64_t uniform_int(uint64_t n);

    // Sample an index from an (already normalized) probability vector.
    int categorical(const std::vector<double>& probs);

    // Independent child stream; deterministic function of the parent's
    // identity and `i` only.
    RngStream split(uint64_t i) const;

private:
    uint64_t seed_;
    uint64_t stream_id_;
    uint64_t s_[4]; // xoshiro256++ state
};

// Free-function spelling of RngStream::split.
inline RngStream split_stream(const RngStream& parent, uint64_t child_id) {
    return parent.split(child_id);
}

} // namespace dbmm

#pragma once

#include <cstdint>

namespace ptt {

/// Counter-based pseudorandom stream. Every value is a pure function of
/// (seed, stream, counter), so draws replay identically on any platform and
/// disjoint streams can be handed to parallel workers.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream) {}

    /// Uniform double in [0, 1).
    double uniform();

    /// Standard normal via Box-Muller on the counter stream.
    double normal();

    /// Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n);

    /// Child generator with an independent stream, for per-task splitting.
    CounterRng split(std::uint64_t substream) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    std::uint64_t next_raw();

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    bool have_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

} // namespace ptt

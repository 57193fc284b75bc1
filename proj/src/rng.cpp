#include "ptt/rng.hpp"

#include <cmath>

namespace ptt {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

std::uint64_t CounterRng::next_raw() {
    std::uint64_t key = splitmix64(seed_ ^ splitmix64(stream_ ^ 0xb5297a4d3f84d5a3ULL));
    return splitmix64(key + 0x632be59bd9b4e019ULL * (++counter_));
}

double CounterRng::uniform() {
    return static_cast<double>(next_raw() >> 11) * 0x1.0p-53;
}

double CounterRng::normal() {
    if (have_cached_normal_) {
        have_cached_normal_ = false;
        return cached_normal_;
    }
    // Box-Muller; u1 shifted away from zero so the log is finite.
    double u1 = uniform();
    double u2 = uniform();
    u1 = u1 <= 0.0 ? 0x1.0p-53 : u1;
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    cached_normal_ = r * std::sin(a);
    have_cached_normal_ = true;
    return r * std::cos(a);
}

std::uint64_t CounterRng::uniform_int(std::uint64_t n) {
    if (n == 0) return 0;
    // Rejection sampling keeps the draw exactly uniform.
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = next_raw();
    while (v >= limit) v = next_raw();
    return v % n;
}

CounterRng CounterRng::split(std::uint64_t substream) const {
    return CounterRng(seed_, splitmix64(stream_ * 0x2545f4914f6cdd1dULL + substream + 1));
}

} // namespace ptt

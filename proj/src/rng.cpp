#include "dsrf/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace dsrf {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 output mix (also used as the stream-derivation hash).
std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return mix64(a + kGolden + mix64(b + kGolden));
}

} // namespace

RandomSource::RandomSource(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id),
      state_(hash_combine(mix64(seed + kGolden), stream_id)) {}

RandomSource RandomSource::split(std::uint64_t child_id) const {
    return RandomSource(seed_, hash_combine(stream_id_, child_id));
}

std::uint64_t RandomSource::next_u64() {
    state_ += kGolden;
    return mix64(state_);
}

double RandomSource::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RandomSource::next_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("next_below: n must be >= 1");
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

std::pair<double, double> RandomSource::next_gaussian_pair() {
    // u1 in (0, 1] keeps the log finite.
    const double u1 = 1.0 - next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    return {r * std::cos(a), r * std::sin(a)};
}

Vec2 RandomSource::next_gaussian_vec2() {
    auto [g0, g1] = next_gaussian_pair();
    return {g0, g1};
}

std::vector<double> sample_gaussian(RandomSource& rng, int n, int d) {
    if (n < 1 || d < 1) throw std::invalid_argument("sample_gaussian: n and d must be >= 1");
    std::vector<double> out(static_cast<std::size_t>(n) * d);
    std::size_t i = 0;
    while (i + 1 < out.size()) {
        auto [g0, g1] = rng.next_gaussian_pair();
        out[i++] = g0;
        out[i++] = g1;
    }
    if (i < out.size()) out[i] = rng.next_gaussian_pair().first;
    return out;
}

std::vector<double> sample_rademacher(RandomSource& rng, int d) {
    if (d < 1) throw std::invalid_argument("sample_rademacher: d must be >= 1");
    std::vector<double> out(static_cast<std::size_t>(d));
    for (auto& v : out) v = (rng.next_u64() >> 63) ? 1.0 : -1.0;
    return out;
}

std::vector<double> sample_unit_sphere(RandomSource& rng, int d) {
    if (d < 1) throw std::invalid_argument("sample_unit_sphere: d must be >= 1");
    std::vector<double> out;
    double n2 = 0.0;
    do {
        out = sample_gaussian(rng, 1, d);
        n2 = 0.0;
        for (double v : out) n2 += v * v;
    } while (n2 == 0.0); // p = 0 event, but keeps the contract total
    if (d == 1) {
        out[0] = out[0] > 0.0 ? 1.0 : -1.0;
        return out;
    }
    const double inv = 1.0 / std::sqrt(n2);
    for (auto& v : out) v *= inv;
    return out;
}

Vec2 sample_unit_sphere_vec2(RandomSource& rng) {
    auto u = sample_unit_sphere(rng, 2);
    return {u[0], u[1]};
}

} // namespace dsrf

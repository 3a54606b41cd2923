#pragma once

#include <bit>
#include <cstdint>

namespace dic {

//! Named sub-streams derived from the single top-level seed.
enum class Stream : std::uint64_t {
    Pricing = 1,
    Calibration = 2,
    QuantoPass1 = 3,
    QuantoPass2 = 4,
    Oracle = 5,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/*! Counter-based generator: the state of path `path` on horizon `key`
    is a pure function of (seed, stream, key, path), so paths can be
    evaluated in any order or on any thread and still reproduce.
*/
class PathRng {
public:
    PathRng(std::uint64_t seed, Stream stream, std::uint64_t key, std::uint64_t path)
        : state_(splitmix64(splitmix64(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(stream)) ^
                                       key) ^
                            path)) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    //! Uniform on the open interval (0,1), 53-bit resolution.
    double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    //! Standard normal by inversion (one uniform per normal, CRN-friendly).
    double normal();

private:
    std::uint64_t state_;
};

//! Stable key for a horizon so that draws at date t do not depend on the rest of the grid.
inline std::uint64_t horizon_key(double t) { return std::bit_cast<std::uint64_t>(t); }

} // namespace dic

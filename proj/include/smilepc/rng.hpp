#pragma once

// Seeded randomness. All randomness in the engine flows from `Rng` instances
// constructed from explicit seeds; `derive_seed` splits one base seed into
// independent streams keyed by purpose and index.

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <type_traits>

namespace smilepc {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace detail {
inline constexpr std::uint64_t mix_one(std::uint64_t h, std::uint64_t v) noexcept {
    return splitmix64(h ^ splitmix64(v));
}
inline constexpr std::uint64_t mix_one(std::uint64_t h, std::string_view v) noexcept {
    return mix_one(h, fnv1a(v));
}
inline std::uint64_t mix_one(std::uint64_t h, double v) noexcept {
    return mix_one(h, std::bit_cast<std::uint64_t>(v));
}
}  // namespace detail

/// Child seed for the stream identified by `parts` (strings, integers or doubles).
template <typename... Parts>
std::uint64_t derive_seed(std::uint64_t base, const Parts&... parts) {
    std::uint64_t h = splitmix64(base);
    ((h = detail::mix_one(h, [](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_convertible_v<P, std::string_view>) return std::string_view(p);
          else if constexpr (std::is_floating_point_v<P>) return static_cast<double>(p);
          else return static_cast<std::uint64_t>(p);
      }(parts))),
     ...);
    return h;
}

/// mt19937_64 with distribution code written out so sequences are identical
/// across standard libraries (std:: distributions are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n) by rejection; n > 0.
    std::uint64_t index(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return r % n;
    }

    bool coin() { return (engine_() >> 63) != 0; }

    /// Standard normal via Box-Muller (one value per call, second discarded).
    double normal() {
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace smilepc

#ifndef QEXP_RNG_HPP
#define QEXP_RNG_HPP

#include <cstdint>
#include <random>

namespace qexp {

namespace detail {

// SplitMix64 finalizer; used to turn (seed, index) pairs into well-mixed
// engine seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Identifies an independent random stream. The variate sequence is a pure
/// function of (master_seed, stream_index), so work split across threads
/// reproduces bit-for-bit.
struct RngStream {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;

  using Engine = std::mt19937_64;

  Engine engine() const {
    const std::uint64_t s =
        detail::splitmix64(master_seed ^ detail::splitmix64(stream_index + 0x632be59bd9b4e019ULL));
    return Engine(s);
  }

  /// Child stream number `i`. Children of distinct parents (or distinct i)
  /// do not share seeds in practice.
  RngStream substream(std::uint64_t i) const noexcept {
    return RngStream{detail::splitmix64(master_seed + 0x2545f4914f6cdd1dULL) ^
                         detail::splitmix64(stream_index),
                     i};
  }

  friend bool operator==(const RngStream&, const RngStream&) = default;
};

/// Uniform on (0, 1]: 53 random bits, never exactly zero.
inline double uniform_open_closed(RngStream::Engine& eng) {
  return static_cast<double>((eng() >> 11) + 1) * 0x1.0p-53;
}

}  // namespace qexp

#endif  // QEXP_RNG_HPP

#pragma once

#include <cstdint>

namespace qns {

/// splitmix64: tiny deterministic generator used for noise phases and seed
/// derivation. Chosen over <random> engines+distributions so that identical
/// configs produce byte-identical outputs on any platform.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  private:
    std::uint64_t state_;
};

/// Stable seed derivation for (base, stream, index) tuples.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
    SplitMix64 g(base ^ (0x632be59bd9b4e019ull * (stream + 1)) ^
                 (0x9e3779b97f4a7c15ull * (index + 1)));
    return g.next();
}

}  // namespace qns

#pragma once

#include <cstdint>
#include <vector>

namespace dtest {

/// Counter-based generator: output i of stream (seed, stream) is
/// splitmix64(key + (i + 1) * golden), with key derived from seed and stream.
/// Any (seed, stream, position) is reproducible without replaying the
/// streams before it.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept;

  std::uint64_t next() noexcept;
  /// Uniform integer in [0, bound), bound > 0 (Lemire's multiply-and-reject).
  std::uint64_t uniform(std::uint64_t bound) noexcept;
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Stream id of repetition `repetition` of the `size_index`-th sample size.
std::uint64_t sample_stream(std::uint64_t size_index, std::uint64_t repetition) noexcept;

/// `count` indices into [0, population). Without replacement the result is
/// a uniformly random ordered subset (partial Fisher-Yates) and
/// count <= population is required.
std::vector<std::size_t> sample_indices(std::size_t population, std::size_t count, bool with_replacement,
                                        CounterRng& rng);

/// Fisher-Yates shuffle in place.
template <typename T>
void shuffle(std::vector<T>& items, CounterRng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace dtest

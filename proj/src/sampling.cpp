#include "dtest/sampling.hpp"

#include <numeric>

#include "dtest/error.hpp"

namespace dtest {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_(splitmix64(seed ^ splitmix64(stream + kGolden))) {}

std::uint64_t CounterRng::next() noexcept {
  ++counter_;
  return splitmix64(key_ + counter_ * kGolden);
}

std::uint64_t CounterRng::uniform(std::uint64_t bound) noexcept {
  unsigned __int128 m = static_cast<unsigned __int128>(next()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(next()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double CounterRng::uniform01() noexcept {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::uint64_t sample_stream(std::uint64_t size_index, std::uint64_t repetition) noexcept {
  return (size_index << 32) ^ repetition;
}

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t count, bool with_replacement,
                                        CounterRng& rng) {
  if (population == 0 && count > 0) throw Error(ErrorCode::EmptySet, "cannot sample from an empty population");
  std::vector<std::size_t> out;
  out.reserve(count);
  if (with_replacement) {
    for (std::size_t i = 0; i < count; ++i) out.push_back(static_cast<std::size_t>(rng.uniform(population)));
    return out;
  }
  if (count > population) {
    throw Error(ErrorCode::InvalidArgument, "cannot draw " + std::to_string(count) + " distinct items from " +
                                                std::to_string(population));
  }
  std::vector<std::size_t> pool(population);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform(population - i));
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
  return out;
}

}  // namespace dtest

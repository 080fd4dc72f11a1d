#pragma once

#include <cstdint>
#include <Eigen/Core>
#include <boost/random/normal_distribution.hpp>

namespace miflow::numerics {

/// Identifies one reproducible random stream. Child streams are derived by hashing, so the
/// stream of (draw 3, layer 2) never depends on how many other streams were consumed first.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;

  SeedSpec child(std::uint64_t index) const noexcept;

  friend bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

/// The SplitMix64 finaliser (Steele, Lea and Flood).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// The SplitMix64 generator as a UniformRandomBitGenerator: one add and one mix per output.
class SplitMix64Engine {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64Engine(std::uint64_t state) noexcept : state_(state) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept {
    const std::uint64_t x = state_;
    state_ += 0x9e3779b97f4a7c15ULL;
    return splitmix64(x);
  }

 private:
  std::uint64_t state_;
};

class RandomStream {
 public:
  explicit RandomStream(SeedSpec seed);

  double normal() { return normal_(engine_); }

  /// Fills m column by column with N(0, stddev^2) draws.
  void fill_normal(Eigen::Ref<Eigen::MatrixXd> m, double stddev);

 private:
  SplitMix64Engine engine_;
  boost::random::normal_distribution<double> normal_{0.0, 1.0};  // ziggurat
};

}  // namespace miflow::numerics

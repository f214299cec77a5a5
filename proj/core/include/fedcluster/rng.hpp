#pragma once

#include <cstdint>
#include <vector>

#include "fedcluster/vec.hpp"

namespace fedcluster {

// Purpose tag of an RNG substream. Every logical consumer of randomness
// derives its own stream keyed by (seed, client, round, purpose) so results
// do not depend on evaluation order.
enum class Purpose : std::uint64_t {
  kData = 1,
  kClusterOptimum,
  kStochGrad,
  kInit,
  kAttack,
  kProbe,
  kSplit,
};

struct StreamId {
  std::uint64_t client = 0;
  std::uint64_t round = 0;
  std::uint64_t purpose = 0;
};

inline std::uint64_t purpose_tag(Purpose p, std::uint64_t extra = 0) {
  return (static_cast<std::uint64_t>(p) << 32) ^ extra;
}

// Counter-free splittable stream: the state is a 64-bit hash of
// (seed, client, round, purpose) advanced by the splitmix64 update. Same key
// gives the same sequence; distinct keys give independent-looking sequences.
class RngStream {
 public:
  RngStream(std::uint64_t seed, StreamId id);

  std::uint64_t next_u64();

  /// Uniform draw in [0, 1).
  double uniform();

  /// Uniform integer in [0, n).
  int uniform_int(int n);

  /// Standard normal via Box-Muller (second draw of each pair is cached).
  double normal();

  Vector normal_vector(int dim, double mean = 0.0, double stddev = 1.0);

  /// k distinct indices sampled uniformly without replacement from [0, n),
  /// in draw order.
  std::vector<int> sample_without_replacement(int n, int k);

 private:
  std::uint64_t state_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace fedcluster

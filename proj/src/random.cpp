#include "miflow/random.hpp"

namespace miflow::numerics {

SeedSpec SeedSpec::child(std::uint64_t index) const noexcept {
  return {master_seed, splitmix64(splitmix64(stream_id) ^ (index + 0x632be59bd9b4e019ULL))};
}

RandomStream::RandomStream(SeedSpec seed)
    : engine_(splitmix64(seed.master_seed ^ splitmix64(seed.stream_id + 0xd1b54a32d192ed03ULL))) {}

void RandomStream::fill_normal(Eigen::Ref<Eigen::MatrixXd> m, double stddev) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = stddev * normal_(engine_);
  }
}

}  // namespace miflow::numerics

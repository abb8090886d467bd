#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>

namespace bsl {

enum class Purpose : std::uint32_t {
  WhiteNoise = 1,
  Fbm = 2,
  MonteCarlo = 3,
  Nugget = 4,
  GaussianPairs = 5,
  Process = 6,
  Probe = 7,
};

// Counter-based stream (Philox4x32-10). The sequence depends only on
// (master_seed, purpose, index), never on thread or call order elsewhere.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, Purpose purpose, std::uint64_t index);

  std::uint64_t master_seed() const { return seed_; }
  Purpose purpose() const { return purpose_; }
  std::uint64_t index() const { return index_; }
  // Sibling stream with the same seed and purpose.
  RngStream substream(std::uint64_t index) const { return RngStream(seed_, purpose_, index); }

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  // Uniform on (0, 1), 53-bit resolution.
  double uniform();
  double normal();
  void fill_normal(Eigen::Ref<Eigen::ArrayXd> out);

 private:
  void refill();

  std::uint64_t seed_;
  Purpose purpose_;
  std::uint64_t index_;
  std::array<std::uint32_t, 2> key_{};
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// One Philox4x32-10 block; exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

}  // namespace bsl

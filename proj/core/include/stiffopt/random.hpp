#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace stiffopt {

// Deterministic, platform-independent random stream.  Identical
// (seed, label) pairs yield identical draw sequences; child streams are
// derived by fork() so concurrent consumers never share state.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::string_view label);

  RandomStream fork(std::string_view child_label) const;

  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller.
  double normal();
  double normal(double mean, double stddev);
  // Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n);

  std::uint64_t seed() const { return seed_; }
  const std::string& label() const { return label_; }

 private:
  void init_state();

  std::uint64_t seed_ = 0;
  std::string label_;
  std::uint64_t s_[4] = {0, 0, 0, 0};  // xoshiro256** state
};

}  // namespace stiffopt

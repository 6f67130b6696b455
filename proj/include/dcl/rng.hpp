#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dcl {

// Named random stream derived from a run seed. Distinct names give
// statistically independent streams, so network draws, instance data and the
// compute/communication clocks can be replayed or varied independently.
class Rng {
 public:
  Rng(std::uint64_t seed, std::string_view stream);

  double uniform();                      // U[0, 1)
  double uniform(double lo, double hi);  // U[lo, hi)
  double normal();                       // N(0, 1)
  double exponential_mean(double mean);  // Exp with the given mean; 0 if mean == 0

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace dcl

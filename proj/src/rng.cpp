#include "mixchain/rng.hpp"

namespace mixchain {

std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t key = splitmix64(master);
  std::uint64_t k = 0;
  for (std::uint64_t counter : path) {
    ++k;
    key = splitmix64(key ^ splitmix64(counter + k));
  }
  return key;
}

Rng::Rng(std::uint64_t seed) noexcept : seed_(seed) {
  std::uint64_t s = seed;
  for (auto& word : state_) {
    s += 0x9e3779b97f4a7c15ULL;
    word = splitmix64(s);
  }
}

double Rng::beta(double a, double b) {
  const double x = gamma(a);
  const double y = gamma(b);
  return x / (x + y);
}

}  // namespace mixchain

#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace semae {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

// Seeded generator whose outputs are bit-identical across standard
// libraries: mt19937_64 and seed_seq are fully specified, and the
// distributions below are written out instead of using <random>'s
// implementation-defined ones.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent stream derived from (seed, name). Used to keep e.g.
  // featurization and batch shuffling from sharing state.
  static Rng substream(std::uint64_t seed, std::string_view name);

  std::uint64_t next() { return engine_(); }
  double uniform();  // [0, 1)
  double normal();   // standard normal, Box-Muller
  std::size_t below(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace semae

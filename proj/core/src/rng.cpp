#include "qdag/rng.hpp"

namespace qdag {

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  std::uint64_t s = mix_seed(base);
  s = mix_seed(s ^ (a + 0x632be59bd9b4e019ULL));
  s = mix_seed(s ^ (b + 0x8cb92ba72f3d8dd7ULL));
  s = mix_seed(s ^ (c + 0x2545f4914f6cdd1dULL));
  return s;
}

}  // namespace qdag

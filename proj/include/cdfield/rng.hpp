#pragma once

#include <cstdint>
#include <random>

namespace cdfield {

// All samplers draw from an explicit engine; identical seeds reproduce
// identical output.
using Rng = std::mt19937_64;

// Uniform on the open interval (0, 1).
inline double uniform_open(Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double x = 0.0;
  do {
    x = unif(rng);
  } while (x == 0.0);
  return x;
}

}  // namespace cdfield

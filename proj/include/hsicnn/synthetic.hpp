#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "hsicnn/ingest.hpp"
#include "hsicnn/rng.hpp"

namespace hsicnn {

struct LabeledScene {
  HsiCube cube;
  GroundTruth gt;
};

// Four classes laid out in spatial quadrants. Each class has a random
// signature in [0, 1)^l; every pixel is its class signature plus Gaussian
// noise with sigma = noise_frac * ||signature||.
inline LabeledScene make_quadrant_scene(std::size_t m, std::size_t n, std::size_t l,
                                        double noise_frac, std::uint64_t seed) {
  constexpr std::size_t kClasses = 4;
  Rng rng(seed, Stream::synthetic);
  std::vector<std::vector<double>> signatures(kClasses, std::vector<double>(l));
  std::vector<double> sigma(kClasses);
  for (std::size_t k = 0; k < kClasses; ++k) {
    double norm2 = 0.0;
    for (auto& v : signatures[k]) {
      v = rng.uniform();
      norm2 += v * v;
    }
    sigma[k] = noise_frac * std::sqrt(norm2);
  }
  LabeledScene scene{HsiCube(m, n, l), GroundTruth(m, n, kClasses)};
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const std::size_t k = (r >= m / 2 ? 2 : 0) + (c >= n / 2 ? 1 : 0);
      scene.gt.at(r, c) = static_cast<std::uint16_t>(k + 1);
      for (std::size_t band = 0; band < l; ++band) {
        scene.cube.at(band, r, c) =
            static_cast<float>(signatures[k][band] + sigma[k] * rng.normal());
      }
    }
  }
  return scene;
}

}  // namespace hsicnn

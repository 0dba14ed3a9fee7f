#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "transcad/rng.hpp"
#include "transcad/vec3.hpp"

namespace transcad {

struct NoiseSpec {
  int octaves = 64;
  double amplitude = 0.001;
  std::uint64_t seed = 0;
  double persistence = 0.5;
  double lacunarity = 2.0;
};

// Classic gradient-lattice Perlin noise with a seeded permutation table.
// Vanishes exactly on integer lattice points; C0-continuous everywhere.
class Perlin3 {
 public:
  explicit Perlin3(std::uint64_t seed) {
    for (int i = 0; i < 256; ++i) perm_[static_cast<std::size_t>(i)] = i;
    Rng rng(derive_seed(seed, 0x9e71ULL));
    for (int i = 255; i > 0; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(0, i));
      std::swap(perm_[static_cast<std::size_t>(i)], perm_[j]);
    }
    for (int i = 0; i < 256; ++i) perm_[static_cast<std::size_t>(i + 256)] = perm_[static_cast<std::size_t>(i)];
  }

  // single octave, in [-1, 1]
  double noise(double x, double y, double z) const {
    // wrap into the 256-periodic lattice before flooring so arbitrarily
    // large frequencies stay finite
    x = wrap(x);
    y = wrap(y);
    z = wrap(z);
    const int xi = static_cast<int>(std::floor(x)) & 255;
    const int yi = static_cast<int>(std::floor(y)) & 255;
    const int zi = static_cast<int>(std::floor(z)) & 255;
    const double xf = x - std::floor(x);
    const double yf = y - std::floor(y);
    const double zf = z - std::floor(z);
    const double u = fade(xf), v = fade(yf), w = fade(zf);

    const int a = p(xi) + yi, aa = p(a) + zi, ab = p(a + 1) + zi;
    const int b = p(xi + 1) + yi, ba = p(b) + zi, bb = p(b + 1) + zi;

    const double res = lerp(
        w,
        lerp(v, lerp(u, grad(p(aa), xf, yf, zf), grad(p(ba), xf - 1, yf, zf)),
             lerp(u, grad(p(ab), xf, yf - 1, zf), grad(p(bb), xf - 1, yf - 1, zf))),
        lerp(v, lerp(u, grad(p(aa + 1), xf, yf, zf - 1), grad(p(ba + 1), xf - 1, yf, zf - 1)),
             lerp(u, grad(p(ab + 1), xf, yf - 1, zf - 1),
                  grad(p(bb + 1), xf - 1, yf - 1, zf - 1))));
    return res;
  }

  // octave sum with persistence/lacunarity, normalized back to [-1, 1]
  double fbm(const Vec3& q, int octaves, double persistence = 0.5,
             double lacunarity = 2.0) const {
    double total = 0.0;
    double amplitude = 1.0;
    double frequency = 1.0;
    double norm = 0.0;
    for (int o = 0; o < octaves; ++o) {
      total += amplitude * noise(q.x * frequency, q.y * frequency, q.z * frequency);
      norm += amplitude;
      amplitude *= persistence;
      frequency *= lacunarity;
    }
    return norm > 0.0 ? total / norm : 0.0;
  }

 private:
  static double wrap(double x) {
    const double w = std::fmod(x, 256.0);
    return w < 0.0 ? w + 256.0 : w;
  }
  static double fade(double t) { return t * t * t * (t * (t * 6 - 15) + 10); }
  static double lerp(double t, double a, double b) { return a + t * (b - a); }
  static double grad(int hash, double x, double y, double z) {
    const int h = hash & 15;
    const double u = h < 8 ? x : y;
    const double v = h < 4 ? y : (h == 12 || h == 14 ? x : z);
    return ((h & 1) == 0 ? u : -u) + ((h & 2) == 0 ? v : -v);
  }
  int p(int i) const { return perm_[static_cast<std::size_t>(i & 511)]; }

  std::array<int, 512> perm_{};
};

inline double perlin3(const Vec3& q, const NoiseSpec& spec) {
  const Perlin3 gen(spec.seed);
  return gen.fbm(q, spec.octaves, spec.persistence, spec.lacunarity);
}

}  // namespace transcad

#pragma once

#include <cstdint>
#include <random>

#include "fhsim/error.hpp"
#include "fhsim/time.hpp"

namespace fhsim {

// All randomness in a run flows through one of these, seeded from the
// scenario. Draws avoid std::uniform_real_distribution so that sequences are
// identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + next_unit() * (hi - lo); }

 private:
  std::mt19937_64 gen_;
};

// Distribution spec for control-plane delays: fixed value or uniform range.
struct RandomVar {
  enum class Kind { Fixed, Uniform } kind = Kind::Fixed;
  double a = 0.0;  // fixed value, or lower bound
  double b = 0.0;  // upper bound when uniform

  static RandomVar fixed(double v) { return RandomVar{Kind::Fixed, v, v}; }
  static RandomVar uniform(double lo, double hi) { return RandomVar{Kind::Uniform, lo, hi}; }

  double sample(Rng& rng) const {
    return kind == Kind::Fixed ? a : rng.uniform(a, b);
  }
};

}  // namespace fhsim

#pragma once

#include <cstdint>
#include <random>

namespace isobench {

/// Seeded normal-variate source used by every operator and data generator.
///
/// Uniforms come from std::mt19937_64, whose output sequence is fixed by the
/// C++ standard, so draws are identical across compilers and platforms. Normals
/// use the basic Box-Muller transform on 53-bit uniforms in (0, 1]; both
/// variates of each pair are consumed in order (cos branch first).
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on (0, 1], 53 bits of resolution.
  double uniform();

  double normal();

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace isobench

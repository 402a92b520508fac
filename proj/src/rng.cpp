#include "betaflow/rng.hpp"

#include <cmath>
#include <limits>

namespace betaflow {

std::mt19937_64 make_engine(std::uint64_t seed, Stream stream, std::uint64_t salt) {
  const auto tag = static_cast<std::uint64_t>(stream);
  std::seed_seq seq{
      static_cast<std::uint32_t>(seed & 0xffffffffu),
      static_cast<std::uint32_t>(seed >> 32),
      static_cast<std::uint32_t>(tag & 0xffffffffu),
      static_cast<std::uint32_t>(tag >> 32),
      static_cast<std::uint32_t>(salt & 0xffffffffu),
      static_cast<std::uint32_t>(salt >> 32)};
  return std::mt19937_64(seq);
}

double draw_t(std::mt19937_64& eng, double df) {
  if (std::isinf(df)) {
    std::normal_distribution<double> normal(0.0, 1.0);
    return normal(eng);
  }
  std::student_t_distribution<double> t(df);
  return t(eng);
}

}  // namespace betaflow

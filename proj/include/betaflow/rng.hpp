#pragma once

#include <cstdint>
#include <random>

namespace betaflow {

// Named sub-streams split off a single user seed. Every stochastic input of a
// simulated path draws from its own engine, so the output is invariant to
// evaluation order and thread count.
enum class Stream : std::uint64_t {
  BrownianX = 1,    // d B(t), p draws per step
  BrownianW = 2,    // d W(t) driving the residual
  BrownianBeta = 3, // d W_beta(t) for the active coefficients
  OuNu = 4,         // OU driver of nu'
  OuU = 5,          // OU driver of u
  OuXi = 6,         // OU driver of xi
  JumpsX = 7,       // per-covariate arrival/size stream (salted by index)
  JumpsY = 8,
  TDrawsNu = 9,     // heavy-tail multipliers of nu
  Bench = 10        // benchmark replication seeds
};

std::mt19937_64 make_engine(std::uint64_t seed, Stream stream, std::uint64_t salt = 0);

// Student-t draw; df = +inf degenerates to a standard normal.
double draw_t(std::mt19937_64& eng, double df);

}  // namespace betaflow

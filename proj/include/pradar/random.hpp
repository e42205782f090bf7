// Deterministic random streams for Monte Carlo trials.
//
// Every random quantity in a simulation is drawn from a stream derived from
// (master seed, trial index, purpose tag). Streams with distinct triples are
// statistically independent, and a trial's draws never depend on how many
// other trials ran before it, so results are reproducible under any trial
// execution order.

#pragma once

#include <complex>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace pradar {

// Purpose tags for stream derivation. One tag per independent source of
// randomness in the pipeline.
enum class StreamTag : std::uint64_t {
  kSignal = 0,      // waveform symbols, fading/RCS coefficients, channel noise
  kCollaboration,   // inter-receiver collaboration noise
  kMac,             // MAC uplink noise
  kSubspace,        // random subspace column selection
  kBootstrap,       // bootstrap resampling
  kScratch,         // tests and ad-hoc draws
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Wraps a seeded PRNG together with the draw primitives used by the
// simulator. The standard complex normal CN(0,1) has independent real and
// imaginary parts, each N(0, 1/2).
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t trial, std::uint64_t tag) {
    std::uint64_t s = seed;
    const std::uint64_t a = detail::splitmix64(s);
    s ^= trial * 0xbf58476d1ce4e5b9ULL;
    const std::uint64_t b = detail::splitmix64(s);
    s ^= tag * 0x94d049bb133111ebULL;
    const std::uint64_t c = detail::splitmix64(s);
    const std::uint64_t d = detail::splitmix64(s);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                      static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                      static_cast<std::uint32_t>(d), static_cast<std::uint32_t>(d >> 32)};
    engine_.seed(seq);
  }

  std::uint64_t next_u64() { return engine_(); }

  double uniform() {
    // 53-bit mantissa in [0, 1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound). bound must be positive.
  std::uint64_t uniform_index(std::uint64_t bound) { return engine_() % bound; }

  double normal() { return normal_(engine_); }

  std::complex<double> standard_complex_normal() {
    static constexpr double kHalfSqrt2 = 0.70710678118654752440;
    return {normal() * kHalfSqrt2, normal() * kHalfSqrt2};
  }

  Eigen::VectorXcd standard_complex_normal_vector(Eigen::Index n) {
    Eigen::VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = standard_complex_normal();
    return v;
  }

  Eigen::MatrixXcd standard_complex_normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXcd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = standard_complex_normal();
    return m;
  }

  // CN(mean, var): mean + sqrt(var) * CN(0,1).
  std::complex<double> complex_normal(std::complex<double> mean, double var) {
    return mean + std::sqrt(var) * standard_complex_normal();
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline RandomStream derive_stream(std::uint64_t seed, std::uint64_t trial, StreamTag tag) {
  return RandomStream(seed, trial, static_cast<std::uint64_t>(tag));
}

inline RandomStream derive_stream(std::uint64_t seed, std::uint64_t trial, std::uint64_t tag) {
  return RandomStream(seed, trial, tag);
}

}  // namespace pradar

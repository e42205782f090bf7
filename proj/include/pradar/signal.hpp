// Synthesis of the IO waveform and the per-receiver reference/surveillance
// measurements.
//
// One trial draws a single waveform x = U * theta shared by all receivers,
// then per receiver i:
//   ref_i  = beta_i * x + noise_ref_i             (both hypotheses)
//   surv_i = alpha_i * x + noise_surv_i           (H1)
//   surv_i = noise_surv_i                         (H0)
// with beta_i ~ CN(mu_beta, sigma_beta_sq), alpha_i ~ CN(0, sigma_alpha_sq),
// and all noises/coefficients independent across receivers and channels.
// Delay-Doppler compensation is modeled as already applied: the H1 echo is
// exactly alpha_i * x.

#pragma once

#include <stdexcept>

#include <Eigen/Dense>

#include "pradar/random.hpp"
#include "pradar/types.hpp"

namespace pradar {

struct ChannelMeasurements {
  Eigen::MatrixXcd ref;    // N x L, one column per receiver
  Eigen::MatrixXcd surv;   // N x L
  Eigen::VectorXcd alpha;  // length L; zero under H0 (no target)
  Eigen::VectorXcd beta;   // length L
  Hypothesis hypothesis = Hypothesis::kH0;
};

// Draws the subspace symbol vector theta.
//   Gaussian: theta ~ CN(0, symbol_cov)
//   QPSK:     i.i.d. equiprobable QPSK entries scaled so Cov(theta) equals
//             symbol_cov, which must be diagonal in this mode.
inline Eigen::VectorXcd draw_symbols(const SubspaceModel& sub, RandomStream& stream) {
  const Eigen::Index d = sub.dim();
  if (sub.alphabet() == SymbolAlphabet::kGaussian) {
    return sub.symbol_cov_sqrt() * stream.standard_complex_normal_vector(d);
  }
  // QPSK alphabet {(+/-1 +/- j)/sqrt(2)} has unit magnitude per entry.
  const Eigen::MatrixXcd& cov = sub.symbol_cov();
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      if (i != j && std::abs(cov(i, j)) > 0.0)
        throw std::invalid_argument("QPSK alphabet requires a diagonal symbol covariance");
  static constexpr double kHalfSqrt2 = 0.70710678118654752440;
  Eigen::VectorXcd theta(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const std::uint64_t bits = stream.next_u64();
    const double re = (bits & 1u) ? kHalfSqrt2 : -kHalfSqrt2;
    const double im = (bits & 2u) ? kHalfSqrt2 : -kHalfSqrt2;
    theta(i) = std::sqrt(cov(i, i).real()) * std::complex<double>(re, im);
  }
  return theta;
}

// x = U * theta; lies in the column span of the basis by construction.
inline Eigen::VectorXcd synthesize_waveform(const SubspaceModel& sub, RandomStream& stream) {
  return sub.basis() * draw_symbols(sub, stream);
}

// Full measurement synthesis for one trial. Draw order is fixed (theta,
// beta, alpha, reference noise, surveillance noise) so a trial is a pure
// function of its stream.
inline ChannelMeasurements synthesize_trial(const SystemConfig& cfg, const SubspaceModel& sub,
                                            const NoiseModel& noise, Hypothesis hypothesis,
                                            RandomStream& stream) {
  const int n = cfg.n_samples;
  const int l = cfg.n_receivers;

  const Eigen::VectorXcd x = synthesize_waveform(sub, stream);

  ChannelMeasurements meas;
  meas.hypothesis = hypothesis;
  meas.beta.resize(l);
  for (int i = 0; i < l; ++i) meas.beta(i) = stream.complex_normal(cfg.mu_beta, cfg.sigma_beta_sq);
  if (hypothesis == Hypothesis::kH1) {
    meas.alpha.resize(l);
    for (int i = 0; i < l; ++i) meas.alpha(i) = stream.complex_normal(0.0, cfg.sigma_alpha_sq);
  } else {
    meas.alpha = Eigen::VectorXcd::Zero(l);
  }

  meas.ref.noalias() = x * meas.beta.transpose();
  meas.ref.noalias() += noise.sqrt_ref * stream.standard_complex_normal_matrix(n, l);

  if (hypothesis == Hypothesis::kH1) {
    meas.surv.noalias() = x * meas.alpha.transpose();
    meas.surv.noalias() += noise.sqrt_surv * stream.standard_complex_normal_matrix(n, l);
  } else {
    meas.surv.noalias() = noise.sqrt_surv * stream.standard_complex_normal_matrix(n, l);
  }
  return meas;
}

}  // namespace pradar

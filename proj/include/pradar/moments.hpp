// Second-order moments of the cross-correlation statistic and of the fused
// measurement, together with the Monte Carlo estimators used to validate
// them.
//
// For zero-mean proper complex Gaussian vectors,
//   Q = z^H M z,  z ~ CN(0, S):   E[Q] = tr(M S),
//                                 E[|Q|^2] = tr(M S M^H S) + |tr(M S)|^2,
//   B = u^H M v,  u,v independent: E[B] = 0, E[|B|^2] = tr(M S_v M^H S_u).
// The CC statistic c_i = r_i^H A s_i decomposes into such forms, giving
//   Var(c|H0) = (|mu_b|^2+sb^2) tr(M_U C_s M_U^H S_th) + tr(M_U C_s M_U^H C_r)
//   Var(c|H1) = Var(c|H0) + sa^2 tr(M_U^H C_r M_U S_th)
//             + sa^2 (|mu_b|^2+sb^2) (tr(M_U S_th M_U^H S_th) + |tr(M_U S_th)|^2)
// where the waveform is treated as CN(0, U S_th U^H). The un-simplified
// N x N kernel form of the same variances is kept as a second algebraic
// route (and serves the whitening-only baseline, whose kernel is not
// subspace-structured).

#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "pradar/cross_correlation.hpp"
#include "pradar/random.hpp"
#include "pradar/signal.hpp"
#include "pradar/types.hpp"

namespace pradar {

struct QuadFormMoments {
  std::complex<double> mean;            // E[Q] = tr(M S)
  std::complex<double> pseudo_variance; // E[Q^2] - E[Q]^2 = tr(M S M S)
  double abs_second_moment;             // E[|Q|^2]
  double var_mag;                       // E[|Q|^2] - |E[Q]|^2 = tr(M S M^H S)
};

inline QuadFormMoments quad_form_moments(const Eigen::MatrixXcd& m, const Eigen::MatrixXcd& cov) {
  QuadFormMoments out;
  const Eigen::MatrixXcd ms = m * cov;
  out.mean = ms.trace();
  out.pseudo_variance = (ms * ms).trace();
  out.var_mag = (ms * (m.adjoint() * cov)).trace().real();
  out.abs_second_moment = out.var_mag + std::norm(out.mean);
  return out;
}

// E[|u^H M v|^2] for independent u ~ CN(0, cov_u), v ~ CN(0, cov_v).
inline double bilinear_form_second_moment(const Eigen::MatrixXcd& m,
                                          const Eigen::MatrixXcd& cov_u,
                                          const Eigen::MatrixXcd& cov_v) {
  return (m * cov_v * m.adjoint() * cov_u).trace().real();
}

struct CcMoments {
  double var_h0 = 0.0;
  double var_h1 = 0.0;
  double var(Hypothesis h) const { return h == Hypothesis::kH0 ? var_h0 : var_h1; }
};

// Variances of c_i for an arbitrary N x N bilinear kernel B, from the
// pre-simplification trace expressions. cov_x is the waveform covariance.
inline CcMoments cc_moments_from_kernel(const SystemConfig& cfg, const Eigen::MatrixXcd& kernel,
                                        const Eigen::MatrixXcd& cov_ref,
                                        const Eigen::MatrixXcd& cov_surv,
                                        const Eigen::MatrixXcd& cov_x) {
  const double mb2 = std::norm(cfg.mu_beta) + cfg.sigma_beta_sq;
  const Eigen::MatrixXcd bs = kernel * cov_surv;
  const Eigen::MatrixXcd bx = kernel * cov_x;
  CcMoments m;
  m.var_h0 = mb2 * (bs * kernel.adjoint() * cov_x).trace().real() +
             (bs * kernel.adjoint() * cov_ref).trace().real();
  m.var_h1 = m.var_h0 +
             cfg.sigma_alpha_sq * (kernel.adjoint() * cov_ref * bx).trace().real() +
             cfg.sigma_alpha_sq * mb2 *
                 ((bx * kernel.adjoint() * cov_x).trace().real() + std::norm(bx.trace()));
  return m;
}

// Subspace-CC variances via the reduced D x D traces.
inline CcMoments cc_moments_closed_form(const SystemConfig& cfg, const CcKernel& kernel,
                                        const SubspaceModel& sub) {
  const double mb2 = std::norm(cfg.mu_beta) + cfg.sigma_beta_sq;
  const Eigen::MatrixXcd& mu = kernel.m_u;
  const Eigen::MatrixXcd& st = sub.symbol_cov();
  const Eigen::MatrixXcd mcs = mu * kernel.c_surv * mu.adjoint();
  const Eigen::MatrixXcd mst = mu * st;

  CcMoments m;
  m.var_h0 = mb2 * (mcs * st).trace().real() + (mcs * kernel.c_ref).trace().real();
  m.var_h1 = m.var_h0 +
             cfg.sigma_alpha_sq * (mu.adjoint() * kernel.c_ref * mst).trace().real() +
             cfg.sigma_alpha_sq * mb2 *
                 ((mst * mu.adjoint() * st).trace().real() + std::norm(mst.trace()));
  return m;
}

// Var(z | H) = sigma_c^2(H) ||W^H g||^2 + sigma_eps^2 ||g||^2 + sigma_eta^2.
// W must respect the topology mask exactly; collaboration noise can be
// switched off (amplify-and-forward baseline).
inline double fused_variance(const SystemConfig& cfg, const Topology& topo,
                             const Eigen::MatrixXcd& w_matrix, const Eigen::VectorXcd& g,
                             const CcMoments& moments, Hypothesis hypothesis,
                             bool collab_noise_enabled = true) {
  if (w_matrix.rows() != topo.adjacency.rows() || w_matrix.cols() != topo.adjacency.cols())
    throw std::invalid_argument("fused_variance: W does not match the topology dimensions");
  for (int j = 0; j < topo.adjacency.cols(); ++j)
    for (int i = 0; i < topo.adjacency.rows(); ++i)
      if (topo.adjacency(i, j) == 0 && w_matrix(i, j) != 0.0)
        throw std::invalid_argument("fused_variance: W has a nonzero entry outside the topology mask");
  const double eps = collab_noise_enabled ? cfg.sigma_eps_sq : 0.0;
  return moments.var(hypothesis) * (w_matrix.adjoint() * g).squaredNorm() +
         eps * g.squaredNorm() + cfg.sigma_eta_sq;
}

// ---------------------------------------------------------------------------
// Monte Carlo estimators
// ---------------------------------------------------------------------------

struct McMomentEstimate {
  double variance = 0.0;   // uncentered: E[c] = 0 in this model
  double std_error = 0.0;  // MC standard error of `variance`
  std::complex<double> mean{0.0, 0.0};
  double mean_std_error = 0.0;
  long n_trials = 0;
};

// Empirical Var(c_i | hypothesis) from n_trials independent pipeline trials
// (synthesize measurements, apply the CC statistic). The law of c_i does not
// depend on the number of receivers, so trials are run with a single
// receiver; this keeps the samples i.i.d. and the runtime linear in one
// receiver's work.
template <typename Statistic>
inline McMomentEstimate mc_cc_variance_with(const SystemConfig& cfg, const SubspaceModel& sub,
                                            const NoiseModel& noise, Hypothesis hypothesis,
                                            long n_trials, std::uint64_t seed,
                                            Statistic&& statistic) {
  SystemConfig solo = cfg;
  solo.n_receivers = 1;

  double m2 = 0.0, m4 = 0.0;
  std::complex<double> sum{0.0, 0.0};
  const std::uint64_t hyp_offset =
      hypothesis == Hypothesis::kH1 ? static_cast<std::uint64_t>(n_trials) : 0u;
  for (long t = 0; t < n_trials; ++t) {
    RandomStream stream = derive_stream(seed, hyp_offset + static_cast<std::uint64_t>(t),
                                        StreamTag::kSignal);
    const ChannelMeasurements meas = synthesize_trial(solo, sub, noise, hypothesis, stream);
    const std::complex<double> c = statistic(meas)(0);
    const double a2 = std::norm(c);
    m2 += a2;
    m4 += a2 * a2;
    sum += c;
  }
  McMomentEstimate est;
  est.n_trials = n_trials;
  const double n = static_cast<double>(n_trials);
  est.variance = m2 / n;
  est.std_error = std::sqrt(std::max(0.0, m4 / n - est.variance * est.variance) / n);
  est.mean = sum / n;
  est.mean_std_error = std::sqrt(est.variance / n);
  return est;
}

inline McMomentEstimate mc_cc_variance(const SystemConfig& cfg, const SubspaceModel& sub,
                                       const NoiseModel& noise, const CcKernel& kernel,
                                       Hypothesis hypothesis, long n_trials,
                                       std::uint64_t seed) {
  return mc_cc_variance_with(cfg, sub, noise, hypothesis, n_trials, seed,
                             [&](const ChannelMeasurements& m) { return cross_correlate(kernel, m); });
}

// Monte Carlo check that Cov(c_i, c_j | H) = 0 for i != j under both
// hypotheses, including the pseudo-covariance E[c_i c_j]. An estimate is
// flagged when either component lies outside 4 standard errors of zero.
struct CrossCovarianceReport {
  struct Entry {
    Hypothesis hypothesis;
    int i = 0, j = 0;
    bool pseudo = false;  // false: E[c_i conj(c_j)]; true: E[c_i c_j]
    std::complex<double> estimate;
    double se_re = 0.0, se_im = 0.0;
    bool pass = true;
  };
  std::vector<Entry> entries;
  long n_trials = 0;
  bool all_pass() const {
    for (const auto& e : entries)
      if (!e.pass) return false;
    return true;
  }
};

inline CrossCovarianceReport cc_cross_covariance_check(const SystemConfig& cfg,
                                                       const SubspaceModel& sub,
                                                       const NoiseModel& noise,
                                                       const CcKernel& kernel, long n_trials,
                                                       std::uint64_t seed) {
  CrossCovarianceReport report;
  report.n_trials = n_trials;
  const int l = cfg.n_receivers;
  if (l < 2) return report;

  for (Hypothesis hyp : {Hypothesis::kH0, Hypothesis::kH1}) {
    Eigen::VectorXcd mean = Eigen::VectorXcd::Zero(l);
    Eigen::MatrixXcd cross = Eigen::MatrixXcd::Zero(l, l);   // sum c c^H
    Eigen::MatrixXcd pseudo = Eigen::MatrixXcd::Zero(l, l);  // sum c c^T
    Eigen::MatrixXd cross_re2 = Eigen::MatrixXd::Zero(l, l);
    Eigen::MatrixXd cross_im2 = Eigen::MatrixXd::Zero(l, l);
    Eigen::MatrixXd pseudo_re2 = Eigen::MatrixXd::Zero(l, l);
    Eigen::MatrixXd pseudo_im2 = Eigen::MatrixXd::Zero(l, l);

    const std::uint64_t hyp_offset =
        hyp == Hypothesis::kH1 ? static_cast<std::uint64_t>(n_trials) : 0u;
    for (long t = 0; t < n_trials; ++t) {
      RandomStream stream = derive_stream(seed, hyp_offset + static_cast<std::uint64_t>(t),
                                          StreamTag::kSignal);
      const ChannelMeasurements meas = synthesize_trial(cfg, sub, noise, hyp, stream);
      const Eigen::VectorXcd c = cross_correlate(kernel, meas);
      mean += c;
      const Eigen::MatrixXcd ch = c * c.adjoint();
      const Eigen::MatrixXcd ct = c * c.transpose();
      cross += ch;
      pseudo += ct;
      cross_re2 += ch.real().cwiseProduct(ch.real());
      cross_im2 += ch.imag().cwiseProduct(ch.imag());
      pseudo_re2 += ct.real().cwiseProduct(ct.real());
      pseudo_im2 += ct.imag().cwiseProduct(ct.imag());
    }

    const double n = static_cast<double>(n_trials);
    mean /= n;
    for (int i = 0; i < l; ++i) {
      for (int j = i + 1; j < l; ++j) {
        auto add_entry = [&](bool is_pseudo, std::complex<double> prod_mean, double re2,
                             double im2, std::complex<double> mean_prod) {
          CrossCovarianceReport::Entry e;
          e.hypothesis = hyp;
          e.i = i;
          e.j = j;
          e.pseudo = is_pseudo;
          e.estimate = prod_mean - mean_prod;
          e.se_re = std::sqrt(std::max(0.0, re2 / n - prod_mean.real() * prod_mean.real()) / n);
          e.se_im = std::sqrt(std::max(0.0, im2 / n - prod_mean.imag() * prod_mean.imag()) / n);
          e.pass = std::abs(e.estimate.real()) <= 4.0 * e.se_re &&
                   std::abs(e.estimate.imag()) <= 4.0 * e.se_im;
          report.entries.push_back(e);
        };
        add_entry(false, cross(i, j) / n, cross_re2(i, j), cross_im2(i, j),
                  mean(i) * std::conj(mean(j)));
        add_entry(true, pseudo(i, j) / n, pseudo_re2(i, j), pseudo_im2(i, j),
                  mean(i) * mean(j));
      }
    }
  }
  return report;
}

}  // namespace pradar

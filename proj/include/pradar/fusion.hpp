// Collaboration combining, MAC fusion, energy detection and ROC estimation.
//
// Per trial: y = W c + eps (eps absent for amplify-and-forward), the fusion
// center receives z = g^H y + eta and tests |z|^2 >= tau. The empirical ROC
// sweeps tau over the pooled trial energies, so no threshold grid parameter
// exists; AUC is the trapezoid over the swept points, which coincides with
// the Mann-Whitney statistic (ties counted half).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pradar/collaboration.hpp"
#include "pradar/cross_correlation.hpp"
#include "pradar/moments.hpp"
#include "pradar/random.hpp"
#include "pradar/signal.hpp"
#include "pradar/types.hpp"

namespace pradar {

struct FusedSample {
  std::complex<double> z;
  double energy = 0.0;  // |z|^2
  Hypothesis hypothesis = Hypothesis::kH0;
};

// y = W c + eps. Collaboration noise is i.i.d. CN(0, sigma_eps_sq) at each
// transmitting receiver; identically zero for AF designs.
inline Eigen::VectorXcd collaborate(const CollabDesign& design, const Eigen::VectorXcd& c,
                                    const SystemConfig& cfg, RandomStream& stream) {
  Eigen::VectorXcd y = design.w_matrix * c;
  if (design.collab_noise_enabled && cfg.sigma_eps_sq > 0) {
    const double scale = std::sqrt(cfg.sigma_eps_sq);
    for (Eigen::Index i = 0; i < y.size(); ++i)
      y(i) += scale * stream.standard_complex_normal();
  }
  return y;
}

inline FusedSample fuse(const Eigen::VectorXcd& g, const Eigen::VectorXcd& y,
                        const SystemConfig& cfg, RandomStream& stream,
                        Hypothesis hypothesis = Hypothesis::kH0) {
  if (g.size() != y.size())
    throw std::invalid_argument("fuse: gain and collaboration vectors differ in length");
  std::complex<double> z = g.dot(y);
  if (cfg.sigma_eta_sq > 0) z += std::sqrt(cfg.sigma_eta_sq) * stream.standard_complex_normal();
  FusedSample sample;
  sample.z = z;
  sample.energy = std::norm(z);
  sample.hypothesis = hypothesis;
  return sample;
}

// Whitening-only baseline statistic: full-length whitened inner product with
// no subspace transformation.
inline Eigen::VectorXcd whitening_only_cc(const NoiseModel& noise,
                                          const ChannelMeasurements& meas) {
  const Eigen::MatrixXcd r_wh = noise.inv_sqrt_ref * meas.ref;
  const Eigen::MatrixXcd s_wh = noise.inv_sqrt_surv * meas.surv;
  const Eigen::Index l = meas.ref.cols();
  Eigen::VectorXcd c(l);
  for (Eigen::Index i = 0; i < l; ++i) c(i) = r_wh.col(i).dot(s_wh.col(i));
  return c;
}

struct ThresholdCalibration {
  double tau = 0.0;
  std::vector<std::string> warnings;
};

// tau = empirical (1 - target_pfa) quantile of the H0 energies, higher
// interpolation: with n samples sorted ascending, tau = v[ceil((n-1)(1-p))].
// The detector alarms on energy >= tau, so at target_pfa -> 1 the threshold
// is the smallest sample and every trial alarms.
inline ThresholdCalibration calibrate_threshold(const std::vector<double>& sorted_h0_energies,
                                                double target_pfa) {
  if (sorted_h0_energies.empty())
    throw std::invalid_argument("calibrate_threshold: empty sample list");
  if (!(target_pfa > 0.0) || target_pfa > 1.0)
    throw std::invalid_argument("calibrate_threshold: target_pfa must be in (0, 1]");
  if (!std::is_sorted(sorted_h0_energies.begin(), sorted_h0_energies.end()))
    throw std::invalid_argument("calibrate_threshold: samples must be sorted ascending");

  ThresholdCalibration cal;
  const std::size_t n = sorted_h0_energies.size();
  if (static_cast<double>(n) * target_pfa < 1.0)
    cal.warnings.push_back("fewer than 1/target_pfa samples; the threshold estimate is coarse");
  if (sorted_h0_energies.front() == sorted_h0_energies.back())
    cal.warnings.push_back(
        "all sample energies are identical; achievable false-alarm rates are 0 or 1 only");

  const double pos = std::ceil(static_cast<double>(n - 1) * (1.0 - target_pfa));
  cal.tau = sorted_h0_energies[static_cast<std::size_t>(pos)];
  return cal;
}

struct RocCurve {
  std::vector<std::pair<double, double>> points;  // (p_fa, p_d), p_fa non-decreasing
  double auc = 0.0;
  long n_trials = 0;  // per hypothesis
};

// Mann-Whitney AUC with midrank tie handling; equals the trapezoid area of
// the empirical ROC swept over all thresholds.
inline double mann_whitney_auc(std::vector<double> h0, std::vector<double> h1) {
  std::sort(h0.begin(), h0.end());
  std::sort(h1.begin(), h1.end());
  const double n0 = static_cast<double>(h0.size());
  const double n1 = static_cast<double>(h1.size());
  double wins = 0.0;
  std::size_t i = 0, j = 0;
  while (j < h1.size()) {
    while (i < h0.size() && h0[i] < h1[j]) ++i;
    std::size_t ties = 0;
    std::size_t k = i;
    while (k < h0.size() && h0[k] == h1[j]) {
      ++ties;
      ++k;
    }
    wins += static_cast<double>(i) + 0.5 * static_cast<double>(ties);
    ++j;
  }
  return wins / (n0 * n1);
}

// Empirical ROC from per-hypothesis energy samples. Thresholds are the
// pooled energy values (plus one above the maximum for the (0, 0) corner);
// alarms are energy >= tau.
inline RocCurve roc_from_energies(std::vector<double> h0, std::vector<double> h1) {
  if (h0.empty() || h1.empty())
    throw std::invalid_argument("roc_from_energies: need samples under both hypotheses");
  std::sort(h0.begin(), h0.end());
  std::sort(h1.begin(), h1.end());
  std::vector<double> pooled;
  pooled.reserve(h0.size() + h1.size());
  std::merge(h0.begin(), h0.end(), h1.begin(), h1.end(), std::back_inserter(pooled));
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

  RocCurve curve;
  curve.n_trials = static_cast<long>(h0.size());
  curve.points.reserve(pooled.size() + 1);
  curve.points.emplace_back(0.0, 0.0);
  const double n0 = static_cast<double>(h0.size());
  const double n1 = static_cast<double>(h1.size());
  for (auto it = pooled.rbegin(); it != pooled.rend(); ++it) {
    const double tau = *it;
    const double pfa =
        static_cast<double>(h0.end() - std::lower_bound(h0.begin(), h0.end(), tau)) / n0;
    const double pd =
        static_cast<double>(h1.end() - std::lower_bound(h1.begin(), h1.end(), tau)) / n1;
    curve.points.emplace_back(pfa, pd);
  }

  double auc = 0.0;
  for (std::size_t k = 1; k < curve.points.size(); ++k) {
    const auto& [x0, y0] = curve.points[k - 1];
    const auto& [x1, y1] = curve.points[k];
    auc += 0.5 * (x1 - x0) * (y0 + y1);
  }
  curve.auc = auc;
  return curve;
}

// Energies from n_trials full pipeline runs per hypothesis. Trial t under H0
// uses trial index t, under H1 index n_trials + t; every random quantity is
// drawn from a stream derived from (seed, trial index, stage tag), so the
// result is independent of execution order.
struct DetectionEnergies {
  std::vector<double> h0;
  std::vector<double> h1;
};

template <typename Statistic>
inline DetectionEnergies run_detection_trials_with(const SystemConfig& cfg,
                                                   const SubspaceModel& sub,
                                                   const NoiseModel& noise,
                                                   const CollabDesign& design, long n_trials,
                                                   std::uint64_t seed, Statistic&& statistic) {
  DetectionEnergies out;
  out.h0.resize(n_trials);
  out.h1.resize(n_trials);
  for (Hypothesis hyp : {Hypothesis::kH0, Hypothesis::kH1}) {
    std::vector<double>& energies = hyp == Hypothesis::kH0 ? out.h0 : out.h1;
    const std::uint64_t offset =
        hyp == Hypothesis::kH1 ? static_cast<std::uint64_t>(n_trials) : 0u;
    for (long t = 0; t < n_trials; ++t) {
      const std::uint64_t idx = offset + static_cast<std::uint64_t>(t);
      RandomStream signal_stream = derive_stream(seed, idx, StreamTag::kSignal);
      RandomStream collab_stream = derive_stream(seed, idx, StreamTag::kCollaboration);
      RandomStream mac_stream = derive_stream(seed, idx, StreamTag::kMac);
      const ChannelMeasurements meas = synthesize_trial(cfg, sub, noise, hyp, signal_stream);
      const Eigen::VectorXcd c = statistic(meas);
      const Eigen::VectorXcd y = collaborate(design, c, cfg, collab_stream);
      energies[t] = fuse(design.mac_gain, y, cfg, mac_stream, hyp).energy;
    }
  }
  return out;
}

inline DetectionEnergies run_detection_trials(const SystemConfig& cfg, const SubspaceModel& sub,
                                              const NoiseModel& noise, const CcKernel& kernel,
                                              const CollabDesign& design, long n_trials,
                                              std::uint64_t seed) {
  return run_detection_trials_with(
      cfg, sub, noise, design, n_trials, seed,
      [&](const ChannelMeasurements& m) { return cross_correlate(kernel, m); });
}

inline RocCurve estimate_roc(const SystemConfig& cfg, const SubspaceModel& sub,
                             const NoiseModel& noise, const CcKernel& kernel,
                             const CollabDesign& design, long n_trials, std::uint64_t seed) {
  if (n_trials < 1000)
    throw std::invalid_argument("estimate_roc: need at least 10^3 trials per hypothesis");
  DetectionEnergies e = run_detection_trials(cfg, sub, noise, kernel, design, n_trials, seed);
  return roc_from_energies(std::move(e.h0), std::move(e.h1));
}

struct AucInterval {
  double auc = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
};

// Percentile bootstrap confidence interval for the AUC.
inline AucInterval bootstrap_auc_ci(const std::vector<double>& h0, const std::vector<double>& h1,
                                    int n_resamples, RandomStream& stream,
                                    double confidence = 0.95) {
  AucInterval ci;
  ci.auc = mann_whitney_auc(h0, h1);
  std::vector<double> aucs(n_resamples);
  std::vector<double> r0(h0.size()), r1(h1.size());
  for (int b = 0; b < n_resamples; ++b) {
    for (auto& v : r0) v = h0[stream.uniform_index(h0.size())];
    for (auto& v : r1) v = h1[stream.uniform_index(h1.size())];
    aucs[b] = mann_whitney_auc(r0, r1);
  }
  std::sort(aucs.begin(), aucs.end());
  const double tail = 0.5 * (1.0 - confidence);
  const auto at = [&](double q) {
    const double pos = q * static_cast<double>(n_resamples - 1);
    return aucs[static_cast<std::size_t>(std::llround(pos))];
  };
  ci.lo = at(tail);
  ci.hi = at(1.0 - tail);
  return ci;
}

}  // namespace pradar

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "pradar/experiment.hpp"
#include "pradar/fusion.hpp"
#include "test_support.hpp"

using namespace pradar;
namespace pt = pradar::testing;

namespace {

// Hand-built design with full self-loop identity combining.
CollabDesign identity_design(int l, double sigma_eps_enabled = true) {
  CollabDesign d;
  d.topology = Topology::from_adjacency(Eigen::MatrixXi::Identity(l, l));
  d.mac_gain = Eigen::VectorXcd::Constant(l, 1.0);
  d.w_matrix = Eigen::MatrixXcd::Identity(l, l);
  d.w_vec = gather_weights(d.topology, d.w_matrix);
  d.g_matrix = build_g_matrix(d.topology, d.mac_gain);
  d.gamma = d.g_matrix * d.g_matrix.adjoint();
  d.power_budget = l;
  d.collab_noise_enabled = sigma_eps_enabled;
  return d;
}

}  // namespace

TEST_CASE("identity combining without noise returns the statistic") {
  SystemConfig cfg;
  cfg.sigma_eps_sq = 0.0;
  const CollabDesign d = identity_design(4);
  RandomStream stream = derive_stream(61, 0, StreamTag::kCollaboration);
  RandomStream gen = derive_stream(61, 1, StreamTag::kScratch);
  const Eigen::VectorXcd c = gen.standard_complex_normal_vector(4);
  REQUIRE((collaborate(d, c, cfg, stream) - c).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("collaboration noise has the configured variance") {
  SystemConfig cfg;
  cfg.sigma_eps_sq = 1.0;
  const CollabDesign d = identity_design(2);
  const Eigen::VectorXcd c = Eigen::VectorXcd::Zero(2);
  const int n = 100000;
  double acc = 0.0;
  for (int t = 0; t < n; ++t) {
    RandomStream stream = derive_stream(62, t, StreamTag::kCollaboration);
    acc += collaborate(d, c, cfg, stream).squaredNorm();
  }
  REQUIRE(acc / (2.0 * n) == Catch::Approx(1.0).epsilon(0.03));
}

TEST_CASE("masked entries never touch the output") {
  ExperimentSpec spec = pt::paper_spec();
  ExperimentModel model = build_model(spec);
  const SystemConfig& cfg = spec.config;
  // Equal variances give the uniform feasible design: every mask entry is
  // nonzero, so neighbor sensitivity is exactly the adjacency pattern.
  const CollabDesign design = design_weights(model.topology, cfg.mac_gain, CcMoments{1.0, 1.0},
                                             cfg.sigma_eps_sq, cfg.sigma_eta_sq,
                                             cfg.power_budget);
  SystemConfig quiet = cfg;
  quiet.sigma_eps_sq = 0.0;
  RandomStream gen = derive_stream(63, 0, StreamTag::kScratch);
  const Eigen::VectorXcd c = gen.standard_complex_normal_vector(cfg.n_receivers);
  // Ring topology: receiver 5 feeds transmitters 2..4 but not 0 or 1.
  REQUIRE(model.topology.adjacency(0, 5) == 0);
  REQUIRE(model.topology.adjacency(2, 5) == 1);
  Eigen::VectorXcd c2 = c;
  c2(5) += std::complex<double>(3.0, -1.0);
  RandomStream s1 = derive_stream(63, 1, StreamTag::kCollaboration);
  RandomStream s2 = derive_stream(63, 1, StreamTag::kCollaboration);
  const Eigen::VectorXcd y1 = collaborate(design, c, quiet, s1);
  const Eigen::VectorXcd y2 = collaborate(design, c2, quiet, s2);
  REQUIRE(y1(0) == y2(0));
  REQUIRE(y1(1) == y2(1));
  REQUIRE(y1(2) != y2(2));
}

TEST_CASE("fusion with zero gain and zero noise returns zero") {
  SystemConfig cfg;
  cfg.sigma_eta_sq = 0.0;
  RandomStream stream = derive_stream(64, 0, StreamTag::kMac);
  RandomStream gen = derive_stream(64, 1, StreamTag::kScratch);
  const Eigen::VectorXcd y = gen.standard_complex_normal_vector(3);
  const FusedSample s = fuse(Eigen::VectorXcd::Zero(3), y, cfg, stream);
  REQUIRE(s.z == std::complex<double>(0, 0));
  REQUIRE(s.energy == 0.0);
}

TEST_CASE("fusion noise variance matches the configuration") {
  SystemConfig cfg;
  cfg.sigma_eta_sq = 0.7;
  const Eigen::VectorXcd y = Eigen::VectorXcd::Zero(2);
  const Eigen::VectorXcd g = Eigen::VectorXcd::Constant(2, 1.0);
  const int n = 100000;
  double acc = 0.0;
  for (int t = 0; t < n; ++t) {
    RandomStream stream = derive_stream(65, t, StreamTag::kMac);
    acc += fuse(g, y, cfg, stream).energy;
  }
  REQUIRE(acc / n == Catch::Approx(0.7).epsilon(0.03));
}

TEST_CASE("pipeline variance of z matches the closed form") {
  ExperimentSpec spec = pt::paper_spec();
  ExperimentModel model = build_model(spec);
  const CcKernel kernel = build_kernel(model.subspace, model.noise);
  const CcMoments moments = cc_moments_closed_form(spec.config, kernel, model.subspace);
  const SystemConfig& cfg = spec.config;
  const SubspaceModel gauss(model.subspace.basis(), model.subspace.symbol_cov(),
                            SymbolAlphabet::kGaussian);
  const CollabDesign design = design_weights(model.topology, cfg.mac_gain, moments,
                                             cfg.sigma_eps_sq, cfg.sigma_eta_sq,
                                             cfg.power_budget);
  const long n = 20000;
  const DetectionEnergies e =
      run_detection_trials(cfg, gauss, model.noise, kernel, design, n, 66);
  for (Hypothesis hyp : {Hypothesis::kH0, Hypothesis::kH1}) {
    const std::vector<double>& en = hyp == Hypothesis::kH0 ? e.h0 : e.h1;
    const double mean = std::accumulate(en.begin(), en.end(), 0.0) / n;
    double second = 0.0;
    for (const double v : en) second += v * v;
    const double se = std::sqrt((second / n - mean * mean) / n);
    const double expected = fused_variance(cfg, design, moments, hyp);
    CAPTURE(to_string(hyp), mean, expected, se);
    REQUIRE(std::abs(mean - expected) < 5.0 * se);
  }
}

TEST_CASE("energy gap between hypotheses equals the variance gap") {
  // E[|z|^2 | H1] - E[|z|^2 | H0] = (var_h1 - var_h0) ||W^H g||^2.
  ExperimentSpec spec = pt::identity_spec(16);
  spec.config.n_receivers = 3;
  spec.config.n_transmitters = 2;
  spec.config.mac_gain = Eigen::VectorXcd::Constant(2, 1.0);
  spec.topology.neighbors_per_tx = 1;
  ExperimentModel model = build_model(spec);
  const CcKernel kernel = build_kernel(model.subspace, model.noise);
  const CcMoments moments = cc_moments_closed_form(spec.config, kernel, model.subspace);
  const SystemConfig& cfg = spec.config;
  const CollabDesign design = design_weights(model.topology, cfg.mac_gain, moments,
                                             cfg.sigma_eps_sq, cfg.sigma_eta_sq,
                                             cfg.power_budget);
  const long n = 50000;
  const DetectionEnergies e =
      run_detection_trials(cfg, model.subspace, model.noise, kernel, design, n, 67);
  double m0 = 0, m1 = 0, s0 = 0, s1 = 0;
  for (long t = 0; t < n; ++t) {
    m0 += e.h0[t];
    m1 += e.h1[t];
    s0 += e.h0[t] * e.h0[t];
    s1 += e.h1[t] * e.h1[t];
  }
  m0 /= n;
  m1 /= n;
  const double se =
      std::sqrt((s0 / n - m0 * m0) / n + (s1 / n - m1 * m1) / n);
  const double expected = (moments.var_h1 - moments.var_h0) *
                          (design.w_matrix.adjoint() * design.mac_gain).squaredNorm();
  REQUIRE(std::abs((m1 - m0) - expected) < 5.0 * se);
}

TEST_CASE("threshold calibration follows the higher-quantile convention") {
  std::vector<double> energies(100);
  std::iota(energies.begin(), energies.end(), 1.0);  // 1..100
  const ThresholdCalibration cal = calibrate_threshold(energies, 0.05);
  REQUIRE(cal.tau == 96.0);
  REQUIRE(cal.warnings.empty());
}

TEST_CASE("threshold at target_pfa = 1 alarms on every sample") {
  std::vector<double> energies{0.5, 1.5, 2.5, 9.0};
  REQUIRE(calibrate_threshold(energies, 1.0).tau == 0.5);
}

TEST_CASE("degenerate and undersized samples carry warnings") {
  const std::vector<double> constant(50, 3.0);
  const ThresholdCalibration cal = calibrate_threshold(constant, 0.01);
  REQUIRE(cal.warnings.size() == 2);  // coarse sample count + constant energies
  REQUIRE_THROWS_AS(calibrate_threshold({}, 0.5), std::invalid_argument);
  REQUIRE_THROWS_AS(calibrate_threshold({3.0, 1.0}, 0.5), std::invalid_argument);
  REQUIRE_THROWS_AS(calibrate_threshold({1.0}, 0.0), std::invalid_argument);
}

TEST_CASE("ROC is chance level when the hypotheses coincide") {
  ExperimentSpec spec = pt::paper_spec();
  spec.config.sigma_alpha_sq = 0.0;
  ExperimentModel model = build_model(spec);
  const CcKernel kernel = build_kernel(model.subspace, model.noise);
  // Equal variances: designed weights are the flagged uniform fallback.
  const CcMoments moments = cc_moments_closed_form(spec.config, kernel, model.subspace);
  const CollabDesign design = design_weights(model.topology, spec.config.mac_gain, moments,
                                             spec.config.sigma_eps_sq, spec.config.sigma_eta_sq,
                                             spec.config.power_budget);
  const RocCurve curve =
      estimate_roc(spec.config, model.subspace, model.noise, kernel, design, 10000, 68);
  REQUIRE(std::abs(curve.auc - 0.5) < 0.02);
}

TEST_CASE("ROC estimation is deterministic and well-formed") {
  ExperimentSpec spec = pt::identity_spec(8);
  ExperimentModel model = build_model(spec);
  const CcKernel kernel = build_kernel(model.subspace, model.noise);
  const CcMoments moments = cc_moments_closed_form(spec.config, kernel, model.subspace);
  const CollabDesign design = design_weights(model.topology, spec.config.mac_gain, moments,
                                             spec.config.sigma_eps_sq, spec.config.sigma_eta_sq,
                                             spec.config.power_budget);
  const RocCurve a =
      estimate_roc(spec.config, model.subspace, model.noise, kernel, design, 2000, 69);
  const RocCurve b =
      estimate_roc(spec.config, model.subspace, model.noise, kernel, design, 2000, 69);
  REQUIRE(a.auc == b.auc);
  REQUIRE(a.points == b.points);

  // Well-formed: p_fa non-decreasing, endpoints (0, .) and (1, 1).
  REQUIRE(a.points.front().first == 0.0);
  REQUIRE(a.points.back().first == 1.0);
  REQUIRE(a.points.back().second == 1.0);
  for (std::size_t k = 1; k < a.points.size(); ++k)
    REQUIRE(a.points[k].first >= a.points[k - 1].first);

  REQUIRE_THROWS_AS(
      estimate_roc(spec.config, model.subspace, model.noise, kernel, design, 500, 69),
      std::invalid_argument);
}

TEST_CASE("a trial's energy does not depend on execution order") {
  ExperimentSpec spec = pt::identity_spec(8);
  ExperimentModel model = build_model(spec);
  const CcKernel kernel = build_kernel(model.subspace, model.noise);
  const CcMoments moments = cc_moments_closed_form(spec.config, kernel, model.subspace);
  const SystemConfig& cfg = spec.config;
  const CollabDesign design = design_weights(model.topology, cfg.mac_gain, moments,
                                             cfg.sigma_eps_sq, cfg.sigma_eta_sq,
                                             cfg.power_budget);
  const long n = 50;
  const std::uint64_t seed = 74;
  const DetectionEnergies sweep =
      run_detection_trials(cfg, model.subspace, model.noise, kernel, design, n, seed);
  // Recompute trial 37 under H1 in isolation; it must match the sweep bit
  // for bit because every draw comes from the trial's own streams.
  const std::uint64_t idx = static_cast<std::uint64_t>(n) + 37;
  RandomStream sig = derive_stream(seed, idx, StreamTag::kSignal);
  RandomStream col = derive_stream(seed, idx, StreamTag::kCollaboration);
  RandomStream mac = derive_stream(seed, idx, StreamTag::kMac);
  const ChannelMeasurements meas =
      synthesize_trial(cfg, model.subspace, model.noise, Hypothesis::kH1, sig);
  const Eigen::VectorXcd y = collaborate(design, cross_correlate(kernel, meas), cfg, col);
  const FusedSample z = fuse(design.mac_gain, y, cfg, mac, Hypothesis::kH1);
  REQUIRE(z.energy == sweep.h1[37]);
}

TEST_CASE("trapezoid AUC equals the Mann-Whitney statistic, ties included") {
  RandomStream gen = derive_stream(70, 0, StreamTag::kScratch);
  std::vector<double> h0(500), h1(400);
  for (auto& v : h0) v = std::floor(gen.uniform() * 50.0);  // force ties
  for (auto& v : h1) v = std::floor(gen.uniform() * 50.0) + 5.0;
  const RocCurve curve = roc_from_energies(h0, h1);
  REQUIRE(curve.auc == Catch::Approx(mann_whitney_auc(h0, h1)).epsilon(1e-12));
}

TEST_CASE("whitening-only statistic reduces to the inner product for white noise") {
  ExperimentSpec spec = pt::identity_spec(8);
  ExperimentModel model = build_model(spec);
  RandomStream stream = derive_stream(71, 0, StreamTag::kSignal);
  const ChannelMeasurements meas =
      synthesize_trial(spec.config, model.subspace, model.noise, Hypothesis::kH1, stream);
  const Eigen::VectorXcd c = whitening_only_cc(model.noise, meas);
  for (int i = 0; i < spec.config.n_receivers; ++i)
    REQUIRE(std::abs(c(i) - meas.ref.col(i).dot(meas.surv.col(i))) < 1e-12);

  // With D = N the subspace statistic coincides with the whitened product.
  const CcKernel kernel = build_kernel(model.subspace, model.noise);
  const Eigen::VectorXcd cs = cross_correlate(kernel, meas);
  REQUIRE((c - cs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("whitening-only statistic has zero mean under H0") {
  ExperimentSpec spec = pt::identity_spec(12);
  spec.config.mu_beta = {0.8, 0.4};
  ExperimentModel model = build_model(spec);
  const int n = 100000;
  std::complex<double> sum{0, 0};
  double power = 0.0;
  for (int t = 0; t < n; ++t) {
    RandomStream stream = derive_stream(72, t, StreamTag::kSignal);
    const ChannelMeasurements meas =
        synthesize_trial(spec.config, model.subspace, model.noise, Hypothesis::kH0, stream);
    const std::complex<double> c = whitening_only_cc(model.noise, meas)(0);
    sum += c;
    power += std::norm(c);
  }
  const std::complex<double> mean = sum / static_cast<double>(n);
  const double se = std::sqrt(power / n / 2.0 / n);
  REQUIRE(std::abs(mean.real()) < 4.0 * se);
  REQUIRE(std::abs(mean.imag()) < 4.0 * se);
}

TEST_CASE("bootstrap interval brackets the point AUC") {
  RandomStream gen = derive_stream(73, 0, StreamTag::kScratch);
  std::vector<double> h0(2000), h1(2000);
  for (auto& v : h0) v = gen.normal();
  for (auto& v : h1) v = gen.normal() + 0.6;
  RandomStream bs = derive_stream(73, 1, StreamTag::kBootstrap);
  const AucInterval ci = bootstrap_auc_ci(h0, h1, 400, bs);
  REQUIRE(ci.lo <= ci.auc);
  REQUIRE(ci.auc <= ci.hi);
  REQUIRE(ci.width() > 0.0);
  REQUIRE(ci.width() < 0.1);
}

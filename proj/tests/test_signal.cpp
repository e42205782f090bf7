#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "pradar/experiment.hpp"
#include "pradar/signal.hpp"
#include "test_support.hpp"

using namespace pradar;
namespace pt = pradar::testing;

namespace {

// Small model for distribution-level properties (they hold for any valid
// configuration).
ExperimentSpec small_spec(SymbolAlphabet alphabet) {
  ExperimentSpec spec = pt::identity_spec(16, 99);
  spec.config.n_receivers = 3;
  spec.config.n_transmitters = 2;
  spec.config.mac_gain = Eigen::VectorXcd::Constant(2, 1.0);
  spec.subspace.alphabet = alphabet;
  return spec;
}

}  // namespace

TEST_CASE("QPSK symbols have unit magnitude under identity covariance") {
  ExperimentSpec spec = pt::paper_spec();
  ExperimentModel model = build_model(spec);
  RandomStream stream = derive_stream(1, 0, StreamTag::kScratch);
  const Eigen::VectorXcd theta = draw_symbols(model.subspace, stream);
  REQUIRE(theta.size() == 32);
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    REQUIRE(std::abs(theta(i)) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("QPSK with a non-diagonal symbol covariance is a configuration error") {
  Eigen::MatrixXcd cov = Eigen::MatrixXcd::Identity(4, 4);
  cov(0, 1) = cov(1, 0) = 0.3;
  const SubspaceModel sub(Eigen::MatrixXcd::Identity(8, 4), cov, SymbolAlphabet::kQpsk);
  RandomStream stream = derive_stream(1, 0, StreamTag::kScratch);
  REQUIRE_THROWS_AS(draw_symbols(sub, stream), std::invalid_argument);
}

TEST_CASE("zero symbol covariance draws the zero vector") {
  const SubspaceModel sub(Eigen::MatrixXcd::Identity(8, 4), Eigen::MatrixXcd::Zero(4, 4),
                          SymbolAlphabet::kGaussian);
  RandomStream stream = derive_stream(1, 0, StreamTag::kScratch);
  REQUIRE(draw_symbols(sub, stream).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Gaussian symbol sample covariance converges to the identity") {
  const int d = 32;
  const SubspaceModel sub(Eigen::MatrixXcd::Identity(d, d), Eigen::MatrixXcd::Identity(d, d),
                          SymbolAlphabet::kGaussian);
  const int n = 100000;
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(d, d);
  for (int t = 0; t < n; ++t) {
    RandomStream stream = derive_stream(5, t, StreamTag::kScratch);
    const Eigen::VectorXcd theta = draw_symbols(sub, stream);
    acc += theta * theta.adjoint();
  }
  acc /= static_cast<double>(n);
  const double rel_err = (acc - Eigen::MatrixXcd::Identity(d, d)).norm() /
                         Eigen::MatrixXcd::Identity(d, d).norm();
  REQUIRE(rel_err < 0.03);
}

TEST_CASE("waveform lies exactly in the subspace span") {
  ExperimentSpec spec = pt::paper_spec();
  ExperimentModel model = build_model(spec);
  RandomStream stream = derive_stream(2, 0, StreamTag::kScratch);
  const Eigen::VectorXcd x = synthesize_waveform(model.subspace, stream);
  const Eigen::MatrixXcd& u = model.subspace.basis();
  const Eigen::VectorXcd residual = x - u * (u.adjoint() * x);
  REQUIRE(residual.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("identity basis reproduces the symbol vector") {
  const int d = 8;
  const SubspaceModel sub(Eigen::MatrixXcd::Identity(d, d), Eigen::MatrixXcd::Identity(d, d),
                          SymbolAlphabet::kGaussian);
  RandomStream s1 = derive_stream(3, 1, StreamTag::kScratch);
  RandomStream s2 = derive_stream(3, 1, StreamTag::kScratch);
  REQUIRE((synthesize_waveform(sub, s1) - draw_symbols(sub, s2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("QPSK waveform energy equals the subspace dimension") {
  ExperimentSpec spec = pt::paper_spec();
  ExperimentModel model = build_model(spec);
  double mean = 0.0;
  const int n = 10000;
  for (int t = 0; t < n; ++t) {
    RandomStream stream = derive_stream(4, t, StreamTag::kScratch);
    mean += synthesize_waveform(model.subspace, stream).squaredNorm();
  }
  mean /= n;
  REQUIRE(mean == Catch::Approx(32.0).epsilon(0.02));
}

TEST_CASE("H0 surveillance channel is uncorrelated with the waveform") {
  ExperimentSpec spec = small_spec(SymbolAlphabet::kGaussian);
  ExperimentModel model = build_model(spec);
  const int n = 10000;
  std::complex<double> mean{0, 0};
  double second = 0.0;
  for (int t = 0; t < n; ++t) {
    RandomStream stream = derive_stream(6, t, StreamTag::kSignal);
    // Redraw the waveform from the same stream the trial uses, then compare
    // against the trial's surveillance column.
    RandomStream probe = derive_stream(6, t, StreamTag::kSignal);
    const Eigen::VectorXcd x = synthesize_waveform(model.subspace, probe);
    const ChannelMeasurements meas =
        synthesize_trial(spec.config, model.subspace, model.noise, Hypothesis::kH0, stream);
    const std::complex<double> u = x.dot(meas.surv.col(0));
    mean += u;
    second += std::norm(u);
  }
  mean /= static_cast<double>(n);
  const double corr = std::abs(mean) / std::sqrt(second / n);
  REQUIRE(corr < 0.05);
}

TEST_CASE("zero RCS variance makes H1 surveillance match H0") {
  ExperimentSpec spec = small_spec(SymbolAlphabet::kGaussian);
  spec.config.sigma_alpha_sq = 0.0;
  ExperimentModel model = build_model(spec);
  const int n = 10000;
  double m0 = 0, m1 = 0, s0 = 0, s1 = 0;
  for (int t = 0; t < n; ++t) {
    RandomStream st0 = derive_stream(7, t, StreamTag::kSignal);
    RandomStream st1 = derive_stream(8, t, StreamTag::kSignal);
    const double e0 =
        synthesize_trial(spec.config, model.subspace, model.noise, Hypothesis::kH0, st0)
            .surv.col(0)
            .squaredNorm();
    const double e1 =
        synthesize_trial(spec.config, model.subspace, model.noise, Hypothesis::kH1, st1)
            .surv.col(0)
            .squaredNorm();
    m0 += e0;
    m1 += e1;
    s0 += e0 * e0;
    s1 += e1 * e1;
  }
  m0 /= n;
  m1 /= n;
  const double var0 = s0 / n - m0 * m0;
  const double var1 = s1 / n - m1 * m1;
  const double se = std::sqrt((var0 + var1) / n);
  REQUIRE(std::abs(m1 - m0) < 5.0 * se);
}

TEST_CASE("reference channel power matches its analytic expectation") {
  // E[||r||^2 / N] = (|mu_beta|^2 + sigma_beta^2) D / N + tr(cov_ref) / N.
  ExperimentSpec spec = pt::paper_spec();
  spec.config.n_receivers = 1;
  spec.config.n_transmitters = 1;
  spec.config.mac_gain = Eigen::VectorXcd::Constant(1, 1.0);
  spec.topology.neighbors_per_tx = 0;
  ExperimentModel model = build_model(spec);
  const SystemConfig& cfg = spec.config;
  const double expected = (std::norm(cfg.mu_beta) + cfg.sigma_beta_sq) *
                              static_cast<double>(cfg.subspace_dim) / cfg.n_samples +
                          model.noise.cov_ref.trace().real() / cfg.n_samples;

  const int n = 10000;
  double mean = 0, second = 0;
  for (int t = 0; t < n; ++t) {
    RandomStream stream = derive_stream(9, t, StreamTag::kSignal);
    const double v = synthesize_trial(cfg, model.subspace, model.noise, Hypothesis::kH1, stream)
                         .ref.col(0)
                         .squaredNorm() /
                     cfg.n_samples;
    mean += v;
    second += v * v;
  }
  mean /= n;
  const double se = std::sqrt((second / n - mean * mean) / n);
  REQUIRE(std::abs(mean - expected) < 5.0 * se);
}

TEST_CASE("noise is independent across channels and receivers") {
  // With mu_beta = 0, sigma_beta = 0 and H0, the measurements are the raw
  // noise vectors; all cross inner products must average to zero.
  ExperimentSpec spec = small_spec(SymbolAlphabet::kGaussian);
  spec.config.mu_beta = 0.0;
  spec.config.sigma_beta_sq = 0.0;
  ExperimentModel model = build_model(spec);
  const int n = 100000;
  std::complex<double> same_recv{0, 0}, cross_ref{0, 0}, cross_surv{0, 0};
  double p_same = 0, p_ref = 0, p_surv = 0;
  for (int t = 0; t < n; ++t) {
    RandomStream stream = derive_stream(10, t, StreamTag::kSignal);
    const ChannelMeasurements m =
        synthesize_trial(spec.config, model.subspace, model.noise, Hypothesis::kH0, stream);
    const std::complex<double> a = m.ref.col(0).dot(m.surv.col(0));
    const std::complex<double> b = m.ref.col(0).dot(m.ref.col(1));
    const std::complex<double> c = m.surv.col(0).dot(m.surv.col(1));
    same_recv += a;
    cross_ref += b;
    cross_surv += c;
    p_same += std::norm(a);
    p_ref += std::norm(b);
    p_surv += std::norm(c);
  }
  const auto zscore = [&](std::complex<double> sum, double power) {
    const std::complex<double> mean = sum / static_cast<double>(n);
    // Per-component standard error of the mean.
    const double se = std::sqrt(power / n / 2.0 / n);
    return std::max(std::abs(mean.real()), std::abs(mean.imag())) / se;
  };
  REQUIRE(zscore(same_recv, p_same) < 3.0);
  REQUIRE(zscore(cross_ref, p_ref) < 3.0);
  REQUIRE(zscore(cross_surv, p_surv) < 3.0);
}

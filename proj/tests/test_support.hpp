// Shared builders for test configurations: the paper-style setup
// (N=128, D=32, L=8, M=5, structured noise), the identity setup, and
// randomized models for property tests.

#pragma once

#include <Eigen/Dense>

#include "pradar/experiment.hpp"
#include "pradar/random.hpp"
#include "pradar/types.hpp"

namespace pradar::testing {

inline ExperimentSpec paper_spec(std::uint64_t seed = 20260809ULL, double g_amp = 1.0) {
  ExperimentSpec spec;
  SystemConfig& c = spec.config;
  c.n_samples = 128;
  c.subspace_dim = 32;
  c.n_receivers = 8;
  c.n_transmitters = 5;
  c.sigma_alpha_sq = 1.0;
  c.mu_beta = {1.0, 0.0};
  c.sigma_beta_sq = 1.0;
  c.sigma_eps_sq = 1.0;
  c.sigma_eta_sq = 1.0;
  c.power_budget = 1.0;
  c.sigma_in_sq = 2.0;
  c.sigma_out_sq = 1.0;
  c.mac_gain = Eigen::VectorXcd::Constant(5, g_amp);
  c.seed = seed;
  spec.subspace.kind = SubspaceDirective::Kind::kDftRandomColumns;
  spec.subspace.alphabet = SymbolAlphabet::kQpsk;
  spec.noise.kind = NoiseDirective::Kind::kStructuredInOut;
  spec.topology.kind = TopologyDirective::Kind::kRingNeighbors;
  spec.topology.neighbors_per_tx = 3;
  spec.run.mode = RunDirective::Mode::kRoc;
  spec.run.n_trials = 10000;
  return spec;
}

// D = N, identity basis and covariances.
inline ExperimentSpec identity_spec(int n = 32, std::uint64_t seed = 7ULL) {
  ExperimentSpec spec = paper_spec(seed);
  SystemConfig& c = spec.config;
  c.n_samples = n;
  c.subspace_dim = n;
  c.n_receivers = 2;
  c.n_transmitters = 1;
  c.mac_gain = Eigen::VectorXcd::Constant(1, 1.0);
  spec.subspace.kind = SubspaceDirective::Kind::kIdentity;
  spec.subspace.alphabet = SymbolAlphabet::kGaussian;
  spec.noise.kind = NoiseDirective::Kind::kIdentity;
  spec.topology.neighbors_per_tx = 1;
  return spec;
}

inline Eigen::MatrixXcd random_complex_matrix(int rows, int cols, RandomStream& stream) {
  Eigen::MatrixXcd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = stream.standard_complex_normal();
  return m;
}

inline Eigen::MatrixXcd random_hermitian_pd(int n, RandomStream& stream, double ridge = 0.5) {
  const Eigen::MatrixXcd a = random_complex_matrix(n, n, stream);
  return a * a.adjoint() / n + ridge * Eigen::MatrixXcd::Identity(n, n);
}

inline Eigen::MatrixXcd random_orthonormal_basis(int n, int d, RandomStream& stream) {
  const Eigen::MatrixXcd a = random_complex_matrix(n, d, stream);
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
  return Eigen::MatrixXcd(qr.householderQ()).leftCols(d);
}

// Random adjacency with forced self-loops for the first m receivers.
inline Topology random_topology(int m, int l, RandomStream& stream, double density = 0.5) {
  Eigen::MatrixXi a = Eigen::MatrixXi::Zero(m, l);
  for (int i = 0; i < m; ++i) {
    a(i, i) = 1;
    for (int j = 0; j < l; ++j)
      if (j != i && stream.uniform() < density) a(i, j) = 1;
  }
  return Topology::from_adjacency(std::move(a));
}

// Random masked W scaled to the power budget.
inline Eigen::MatrixXcd random_feasible_w(const Topology& topo, double p_w,
                                          RandomStream& stream) {
  Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(topo.n_transmitters(), topo.n_receivers());
  for (const auto& [i, j] : topo.nonzero_index_map) w(i, j) = stream.standard_complex_normal();
  w *= std::sqrt(p_w) / w.norm();
  return w;
}

}  // namespace pradar::testing

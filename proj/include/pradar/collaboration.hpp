// Topology-constrained collaboration weights.
//
// The masked matrix W (M x L) is vectorized through the topology's
// column-major index map into w (length n_W), and the MAC gains are expanded
// into G (n_W x L) so that g^H W = w^H G holds identically. The variance
// ratio
//   R(w) = (s1^2 w^H Gamma w + omega) / (s0^2 w^H Gamma w + omega),
//   Gamma = G G^H,  omega = sigma_eps^2 ||g||^2 + sigma_eta^2,
// is maximized subject to ||w||^2 = P_W by the top generalized eigenvector
// of (Omega_1, Omega_0) with Omega_h = s_h^2 Gamma + (omega/P_W) I.
//
// Convention: the paper's gain-expansion writes [G]_{lm} = g_{i_l}; for
// complex gains that does not make g^H W = w^H G an identity, so we store
// G_{lm} = conj(g_{i_l}) and w_l = conj(W_{i_l j_l}). The objective depends
// only on w^H Gamma w, so the optimization is unchanged, and for real gains
// both conventions coincide.

#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

#include "pradar/moments.hpp"
#include "pradar/types.hpp"

namespace pradar {

inline Eigen::MatrixXcd build_g_matrix(const Topology& topo, const Eigen::VectorXcd& g) {
  if (g.size() != topo.n_transmitters())
    throw std::invalid_argument("build_g_matrix: gain vector length must equal n_transmitters");
  Eigen::MatrixXcd gm = Eigen::MatrixXcd::Zero(topo.edge_count(), topo.n_receivers());
  for (int l = 0; l < topo.edge_count(); ++l) {
    const auto [i, j] = topo.nonzero_index_map[l];
    gm(l, j) = std::conj(g(i));
  }
  return gm;
}

// w_l = conj(W_{i_l j_l}), column-major over the mask.
inline Eigen::VectorXcd gather_weights(const Topology& topo, const Eigen::MatrixXcd& w_matrix) {
  Eigen::VectorXcd w(topo.edge_count());
  for (int l = 0; l < topo.edge_count(); ++l) {
    const auto [i, j] = topo.nonzero_index_map[l];
    w(l) = std::conj(w_matrix(i, j));
  }
  return w;
}

inline Eigen::MatrixXcd scatter_weights(const Topology& topo, const Eigen::VectorXcd& w_vec) {
  Eigen::MatrixXcd w_matrix =
      Eigen::MatrixXcd::Zero(topo.n_transmitters(), topo.n_receivers());
  for (int l = 0; l < topo.edge_count(); ++l) {
    const auto [i, j] = topo.nonzero_index_map[l];
    w_matrix(i, j) = std::conj(w_vec(l));
  }
  return w_matrix;
}

inline double collaboration_omega(const Eigen::VectorXcd& g, double sigma_eps_sq,
                                  double sigma_eta_sq) {
  return sigma_eps_sq * g.squaredNorm() + sigma_eta_sq;
}

// R(w) for a feasible w; enforces the power constraint ||w||^2 = P_W.
inline double variance_ratio(const Eigen::VectorXcd& w_vec, const Eigen::MatrixXcd& gamma,
                             const CcMoments& moments, double omega, double p_w) {
  if (!(omega > 0)) throw std::invalid_argument("variance_ratio: omega must be positive");
  const double power = w_vec.squaredNorm();
  if (std::abs(power - p_w) > 1e-8 * std::max(1.0, p_w))
    throw std::invalid_argument("variance_ratio: ||w||^2 violates the power budget");
  const double quad = (w_vec.adjoint() * gamma * w_vec)(0).real();
  return (moments.var_h1 * quad + omega) / (moments.var_h0 * quad + omega);
}

struct CollabDesign {
  Topology topology;
  Eigen::VectorXcd mac_gain;   // g used at the fusion stage
  Eigen::VectorXcd w_vec;      // length n_W
  Eigen::MatrixXcd w_matrix;   // M x L
  Eigen::MatrixXcd g_matrix;   // n_W x L
  Eigen::MatrixXcd gamma;      // n_W x n_W
  double ratio = 1.0;          // achieved R
  double omega = 0.0;
  double power_budget = 0.0;
  double lambda_max_gamma = 0.0;
  int lambda_max_multiplicity = 0;
  bool collab_noise_enabled = true;
  bool degenerate_equal_variances = false;  // warning: any feasible w is optimal
};

namespace detail {

// Global phase is arbitrary; rotate so the largest-magnitude entry is real
// positive. Keeps designs reproducible for regression tests.
inline void fix_phase(Eigen::VectorXcd& w) {
  Eigen::Index idx = 0;
  w.cwiseAbs().maxCoeff(&idx);
  const std::complex<double> pivot = w(idx);
  if (std::abs(pivot) > 0.0) w *= std::conj(pivot) / std::abs(pivot);
}

}  // namespace detail

// Optimal masked collaboration weights via the generalized Rayleigh
// quotient. Omega_0 is Hermitian PD (omega > 0), so the problem is reduced
// with its Cholesky factor to a standard Hermitian eigenproblem.
inline CollabDesign design_weights(const Topology& topo, const Eigen::VectorXcd& g,
                                   const CcMoments& moments, double sigma_eps_sq,
                                   double sigma_eta_sq, double p_w) {
  if (!(p_w > 0)) throw std::invalid_argument("design_weights: power budget must be positive");

  CollabDesign design;
  design.topology = topo;
  design.mac_gain = g;
  design.power_budget = p_w;
  design.g_matrix = build_g_matrix(topo, g);
  design.gamma = design.g_matrix * design.g_matrix.adjoint();
  design.omega = collaboration_omega(g, sigma_eps_sq, sigma_eta_sq);
  if (!(design.omega > 0))
    throw std::invalid_argument("design_weights: omega must be positive");
  if (design.gamma.norm() == 0.0)
    throw std::invalid_argument("design_weights: degenerate MAC gains (all zero)");

  const int n_w = topo.edge_count();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> gamma_es(design.gamma);
  design.lambda_max_gamma = gamma_es.eigenvalues().maxCoeff();
  design.lambda_max_multiplicity = 0;
  for (int i = 0; i < n_w; ++i)
    if (gamma_es.eigenvalues()(i) >= design.lambda_max_gamma * (1.0 - 1e-9))
      ++design.lambda_max_multiplicity;

  if (!(moments.var_h1 > moments.var_h0)) {
    // Equal variances: R(w) = 1 for every feasible w.
    design.degenerate_equal_variances = true;
    design.w_vec = Eigen::VectorXcd::Constant(n_w, std::sqrt(p_w / n_w));
    design.w_matrix = scatter_weights(topo, design.w_vec);
    design.ratio = variance_ratio(design.w_vec, design.gamma, moments, design.omega, p_w);
    return design;
  }

  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(n_w, n_w);
  const Eigen::MatrixXcd omega0 = moments.var_h0 * design.gamma + (design.omega / p_w) * eye;
  const Eigen::MatrixXcd omega1 = moments.var_h1 * design.gamma + (design.omega / p_w) * eye;

  Eigen::LLT<Eigen::MatrixXcd> llt(omega0);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("design_weights: Omega_0 is not positive definite");
  const Eigen::MatrixXcd chol = llt.matrixL();
  const auto lower = chol.triangularView<Eigen::Lower>();
  Eigen::MatrixXcd reduced = lower.solve(omega1);
  reduced = lower.solve(reduced.adjoint()).adjoint();
  reduced = 0.5 * (reduced + reduced.adjoint()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(reduced);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("design_weights: eigendecomposition failed");
  design.ratio = es.eigenvalues()(n_w - 1);

  Eigen::VectorXcd w = chol.adjoint().triangularView<Eigen::Upper>().solve(
      Eigen::VectorXcd(es.eigenvectors().col(n_w - 1)));
  w *= std::sqrt(p_w) / w.norm();
  detail::fix_phase(w);
  design.w_vec = w;
  design.w_matrix = scatter_weights(topo, w);
  return design;
}

// Amplify-and-forward baseline: all L receivers transmit their own scaled CC
// statistic, W = sqrt(P_W / L) I_L, no inter-receiver exchange and no
// collaboration noise. Default gains replicate the first configured MAC gain
// across the L transmitters (the experiments use uniform gains).
inline CollabDesign af_baseline(const SystemConfig& cfg, const CcMoments& moments,
                                std::optional<Eigen::VectorXcd> g_af = std::nullopt) {
  const int l = cfg.n_receivers;
  Eigen::VectorXcd g;
  if (g_af.has_value()) {
    if (g_af->size() != l)
      throw std::invalid_argument("af_baseline: gain vector length must equal n_receivers");
    g = *g_af;
  } else {
    if (cfg.mac_gain.size() == 0)
      throw std::invalid_argument("af_baseline: config has no MAC gain to replicate");
    g = Eigen::VectorXcd::Constant(l, cfg.mac_gain(0));
  }

  CollabDesign design;
  design.topology =
      Topology::from_adjacency(Eigen::MatrixXi::Identity(l, l));
  design.mac_gain = g;
  design.power_budget = cfg.power_budget;
  design.collab_noise_enabled = false;
  design.g_matrix = build_g_matrix(design.topology, g);
  design.gamma = design.g_matrix * design.g_matrix.adjoint();
  design.w_vec = Eigen::VectorXcd::Constant(l, std::sqrt(cfg.power_budget / l));
  design.w_matrix = scatter_weights(design.topology, design.w_vec);
  design.omega = cfg.sigma_eta_sq;  // no collaboration noise in AF
  design.lambda_max_gamma = design.gamma.diagonal().real().maxCoeff();
  design.lambda_max_multiplicity = 0;
  for (int i = 0; i < l; ++i)
    if (design.gamma(i, i).real() >= design.lambda_max_gamma * (1.0 - 1e-9))
      ++design.lambda_max_multiplicity;
  if (design.omega > 0) {
    design.ratio = variance_ratio(design.w_vec, design.gamma, moments, design.omega,
                                  cfg.power_budget);
  } else {
    const double quad = (design.w_vec.adjoint() * design.gamma * design.w_vec)(0).real();
    design.ratio = quad > 0 ? moments.var_h1 / moments.var_h0 : 1.0;
  }
  return design;
}

inline double fused_variance(const SystemConfig& cfg, const CollabDesign& design,
                             const CcMoments& moments, Hypothesis hypothesis) {
  return fused_variance(cfg, design.topology, design.w_matrix, design.mac_gain, moments,
                        hypothesis, design.collab_noise_enabled);
}

}  // namespace pradar

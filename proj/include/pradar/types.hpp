// Domain types for the distributed two-channel passive-radar model:
// scalar system parameters, the waveform subspace, channel noise models and
// the collaboration topology. All types are immutable values once built and
// safe to share across parallel workers.

#pragma once

#include <algorithm>
#include <complex>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pradar/linalg.hpp"

namespace pradar {

enum class Hypothesis { kH0 = 0, kH1 = 1 };

enum class SymbolAlphabet { kGaussian, kQpsk };

inline const char* to_string(Hypothesis h) { return h == Hypothesis::kH0 ? "H0" : "H1"; }

// Scalar parameters of the measurement, collaboration and fusion model.
struct SystemConfig {
  int n_samples = 0;      // N, snapshots per channel
  int subspace_dim = 0;   // D
  int n_receivers = 0;    // L
  int n_transmitters = 0; // M, receivers that report to the fusion center

  double sigma_alpha_sq = 0.0;          // target RCS variance
  std::complex<double> mu_beta{0.0, 0.0};  // direct-path mean
  double sigma_beta_sq = 0.0;           // direct-path fading variance
  double sigma_eps_sq = 0.0;            // collaboration noise variance
  double sigma_eta_sq = 0.0;            // MAC noise variance
  double power_budget = 1.0;            // P_W, tr(W W^H)

  // In-/out-of-subspace noise powers for the structured covariance preset.
  double sigma_in_sq = 1.0;
  double sigma_out_sq = 1.0;

  Eigen::VectorXcd mac_gain;  // g, length M
  std::uint64_t seed = 0;
};

// Waveform subspace: orthonormal basis U (N x D), symbol covariance (D x D)
// and the symbol alphabet. The symbol covariance square root is precomputed
// so per-trial draws are a single matrix-vector product.
class SubspaceModel {
 public:
  SubspaceModel() = default;
  SubspaceModel(Eigen::MatrixXcd basis, Eigen::MatrixXcd symbol_cov, SymbolAlphabet alphabet)
      : basis_(std::move(basis)), symbol_cov_(std::move(symbol_cov)), alphabet_(alphabet) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(symbol_cov_);
    symbol_cov_sqrt_ = es.eigenvectors() *
                       es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                       es.eigenvectors().adjoint();
  }

  const Eigen::MatrixXcd& basis() const { return basis_; }
  const Eigen::MatrixXcd& symbol_cov() const { return symbol_cov_; }
  const Eigen::MatrixXcd& symbol_cov_sqrt() const { return symbol_cov_sqrt_; }
  SymbolAlphabet alphabet() const { return alphabet_; }

  Eigen::Index n_samples() const { return basis_.rows(); }
  Eigen::Index dim() const { return basis_.cols(); }

 private:
  Eigen::MatrixXcd basis_;
  Eigen::MatrixXcd symbol_cov_;
  Eigen::MatrixXcd symbol_cov_sqrt_;
  SymbolAlphabet alphabet_ = SymbolAlphabet::kGaussian;
};

// Per-channel noise covariances with their square roots (for sampling) and
// inverse square roots (for whitening).
struct NoiseModel {
  Eigen::MatrixXcd cov_ref;
  Eigen::MatrixXcd cov_surv;
  Eigen::MatrixXcd sqrt_ref;
  Eigen::MatrixXcd sqrt_surv;
  Eigen::MatrixXcd inv_sqrt_ref;
  Eigen::MatrixXcd inv_sqrt_surv;

  // Builds everything from the two covariances via Hermitian
  // eigendecomposition.
  static NoiseModel from_covariances(Eigen::MatrixXcd cov_ref, Eigen::MatrixXcd cov_surv) {
    NoiseModel nm;
    auto ref = hermitian_sqrt_pair(cov_ref, "reference channel covariance");
    auto surv = hermitian_sqrt_pair(cov_surv, "surveillance channel covariance");
    nm.cov_ref = std::move(cov_ref);
    nm.cov_surv = std::move(cov_surv);
    nm.sqrt_ref = std::move(ref.sqrt);
    nm.inv_sqrt_ref = std::move(ref.inv_sqrt);
    nm.sqrt_surv = std::move(surv.sqrt);
    nm.inv_sqrt_surv = std::move(surv.inv_sqrt);
    return nm;
  }
};

// Collaboration graph. adjacency(i, j) = 1 when receiver j forwards its CC
// statistic to transmitting receiver i. Transmitting receivers are the first
// M receivers and row i owns column i, so adjacency(i, i) = 1.
//
// nonzero_index_map lists the (row, col) positions of the ones in adjacency,
// traversed column by column (column 0 first) and by increasing row within
// a column. This is the vectorization order of the collaboration matrix W.
struct Topology {
  Eigen::MatrixXi adjacency;                       // M x L, entries in {0, 1}
  std::vector<std::pair<int, int>> nonzero_index_map;

  static Topology from_adjacency(Eigen::MatrixXi a) {
    Topology t;
    t.adjacency = std::move(a);
    for (int j = 0; j < t.adjacency.cols(); ++j)
      for (int i = 0; i < t.adjacency.rows(); ++i)
        if (t.adjacency(i, j) != 0) t.nonzero_index_map.emplace_back(i, j);
    return t;
  }

  int n_transmitters() const { return static_cast<int>(adjacency.rows()); }
  int n_receivers() const { return static_cast<int>(adjacency.cols()); }
  int edge_count() const { return static_cast<int>(nonzero_index_map.size()); }
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Cross-checks the four model objects against every structural invariant.
// Returns the list of violations; an empty report means the configuration is
// usable.
inline ValidationReport validate_config(const SystemConfig& cfg, const SubspaceModel& sub,
                                        const NoiseModel& noise, const Topology& topo) {
  ValidationReport report;
  auto flag = [&](const std::string& msg) { report.violations.push_back(msg); };

  if (cfg.n_samples <= 0) flag("n_samples must be positive");
  if (cfg.subspace_dim <= 0) flag("subspace_dim must be positive");
  if (cfg.n_receivers <= 0) flag("n_receivers must be positive");
  if (cfg.n_transmitters <= 0) flag("n_transmitters must be positive");
  if (cfg.subspace_dim > cfg.n_samples) flag("subspace_dim exceeds n_samples");
  if (cfg.n_transmitters > cfg.n_receivers) flag("n_transmitters exceeds n_receivers");
  if (cfg.sigma_alpha_sq < 0) flag("sigma_alpha_sq must be nonnegative");
  if (cfg.sigma_beta_sq < 0) flag("sigma_beta_sq must be nonnegative");
  if (cfg.sigma_eps_sq < 0) flag("sigma_eps_sq must be nonnegative");
  if (cfg.sigma_eta_sq < 0) flag("sigma_eta_sq must be nonnegative");
  if (!(cfg.power_budget > 0)) flag("power_budget must be positive");
  if (cfg.mac_gain.size() != cfg.n_transmitters)
    flag("mac_gain must have exactly n_transmitters entries");

  if (sub.basis().rows() != cfg.n_samples || sub.basis().cols() != cfg.subspace_dim)
    flag("subspace basis dimensions do not match (n_samples x subspace_dim)");
  else if (!has_orthonormal_columns(sub.basis(), 1e-10))
    flag("subspace basis columns are not orthonormal");
  if (sub.symbol_cov().rows() != cfg.subspace_dim || sub.symbol_cov().cols() != cfg.subspace_dim)
    flag("symbol covariance must be subspace_dim x subspace_dim");
  else if (!is_hermitian_psd(sub.symbol_cov(), 1e-10))
    flag("symbol covariance is not Hermitian positive semidefinite");

  const Eigen::Index n = cfg.n_samples;
  if (noise.cov_ref.rows() != n || noise.cov_ref.cols() != n ||
      noise.cov_surv.rows() != n || noise.cov_surv.cols() != n) {
    flag("noise covariances must be n_samples x n_samples");
  } else {
    const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(n, n);
    if ((noise.inv_sqrt_ref * noise.cov_ref * noise.inv_sqrt_ref - eye).cwiseAbs().maxCoeff() >
        1e-8)
      flag("inv_sqrt_ref is not the inverse square root of cov_ref");
    if ((noise.inv_sqrt_surv * noise.cov_surv * noise.inv_sqrt_surv - eye).cwiseAbs().maxCoeff() >
        1e-8)
      flag("inv_sqrt_surv is not the inverse square root of cov_surv");
  }

  if (topo.adjacency.rows() != cfg.n_transmitters || topo.adjacency.cols() != cfg.n_receivers) {
    flag("topology adjacency must be n_transmitters x n_receivers");
  } else {
    const int n_self = static_cast<int>(std::min(topo.adjacency.rows(), topo.adjacency.cols()));
    for (int i = 0; i < n_self; ++i) {
      if (topo.adjacency(i, i) != 1) {
        flag("topology self-loop missing: transmitter " + std::to_string(i) +
             " must forward its own CC statistic");
        break;
      }
    }
    for (int i = 0; i < topo.adjacency.rows(); ++i)
      for (int j = 0; j < topo.adjacency.cols(); ++j)
        if (topo.adjacency(i, j) != 0 && topo.adjacency(i, j) != 1) {
          flag("topology adjacency entries must be 0 or 1");
          i = topo.adjacency.rows();
          break;
        }
    // Index map must enumerate the ones column-major.
    std::vector<std::pair<int, int>> expected;
    for (int j = 0; j < topo.adjacency.cols(); ++j)
      for (int i = 0; i < topo.adjacency.rows(); ++i)
        if (topo.adjacency(i, j) != 0) expected.emplace_back(i, j);
    if (expected != topo.nonzero_index_map)
      flag("topology index map is not the column-major enumeration of adjacency");
  }

  return report;
}

}  // namespace pradar

// Experiment specification: configuration schema, and generators that turn
// the directives into concrete subspace/noise/topology objects.
//
// The configuration file is a single JSON document:
//
//   {
//     "system":   { every SystemConfig field },
//     "subspace": { "kind": "dft_random_columns" | "identity" | "file",
//                   "path": "...", "alphabet": "gaussian" | "qpsk" },
//     "noise":    { "kind": "structured_in_out" | "identity" | "file",
//                   "path": "..." },
//     "topology": { "kind": "ring_neighbors" | "file",
//                   "neighbors_per_tx": k, "path": "..." },
//     "run":      { "mode": "validate-config" | "validate-moments" |
//                           "design-weights" | "roc" | "reproduce",
//                   "n_trials": n, "figure": 2 | 3,
//                   "baselines": ["af", "whitening"], "target_pfa": p }
//   }
//
// Complex scalars are [re, im] pairs; mac_gain is an array of pairs.
// Serialization round-trips exactly. Explicit matrix files use
// {"rows": r, "cols": c, "data": [[re, im] ...]} in row-major order.

#pragma once

#include <complex>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "pradar/random.hpp"
#include "pradar/types.hpp"

namespace pradar {

using nlohmann::json;

struct SubspaceDirective {
  enum class Kind { kDftRandomColumns, kIdentity, kExplicitFile };
  Kind kind = Kind::kDftRandomColumns;
  std::string path;  // ExplicitFile only
  SymbolAlphabet alphabet = SymbolAlphabet::kGaussian;
};

struct NoiseDirective {
  enum class Kind { kStructuredInOut, kIdentity, kExplicitFile };
  Kind kind = Kind::kStructuredInOut;
  std::string path;
};

struct TopologyDirective {
  enum class Kind { kRingNeighbors, kExplicitFile };
  Kind kind = Kind::kRingNeighbors;
  int neighbors_per_tx = 0;
  std::string path;
};

struct RunDirective {
  enum class Mode { kValidateConfig, kValidateMoments, kDesignWeights, kRoc, kReproduce };
  Mode mode = Mode::kValidateConfig;
  long n_trials = 10000;
  int figure = 2;
  std::vector<std::string> baselines;  // subset of {"af", "whitening"}
  double target_pfa = 0.1;
};

struct ExperimentSpec {
  SystemConfig config;
  SubspaceDirective subspace;
  NoiseDirective noise;
  TopologyDirective topology;
  RunDirective run;
};

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

namespace detail {

inline Eigen::MatrixXcd read_complex_matrix(const json& j, const std::string& path) {
  const int rows = j.at("rows").get<int>();
  const int cols = j.at("cols").get<int>();
  const auto& data = j.at("data");
  if (rows <= 0 || cols <= 0 || static_cast<int>(data.size()) != rows * cols)
    throw std::invalid_argument(path + ": matrix dimensions do not match data length");
  Eigen::MatrixXcd m(rows, cols);
  int k = 0;
  for (int i = 0; i < rows; ++i)
    for (int j2 = 0; j2 < cols; ++j2, ++k)
      m(i, j2) = std::complex<double>(data[k][0].get<double>(), data[k][1].get<double>());
  return m;
}

inline json write_complex_matrix(const Eigen::MatrixXcd& m) {
  json j;
  j["rows"] = static_cast<int>(m.rows());
  j["cols"] = static_cast<int>(m.cols());
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j2 = 0; j2 < m.cols(); ++j2)
      data.push_back({m(i, j2).real(), m(i, j2).imag()});
  j["data"] = std::move(data);
  return j;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  json j;
  in >> j;
  return j;
}

}  // namespace detail

// DftRandomColumns: d distinct columns of the unitary n-point DFT matrix,
// chosen uniformly without replacement (and kept in index order). Identity:
// the first d standard basis vectors.
inline SubspaceModel generate_subspace(const SubspaceDirective& directive, int n, int d,
                                       RandomStream& stream) {
  if (d > n) throw std::invalid_argument("generate_subspace: subspace_dim exceeds n_samples");
  Eigen::MatrixXcd basis(n, d);
  switch (directive.kind) {
    case SubspaceDirective::Kind::kDftRandomColumns: {
      std::vector<int> cols(n);
      std::iota(cols.begin(), cols.end(), 0);
      for (int k = 0; k < d; ++k) {
        const auto pick = k + static_cast<int>(stream.uniform_index(n - k));
        std::swap(cols[k], cols[pick]);
      }
      std::sort(cols.begin(), cols.begin() + d);
      const double scale = 1.0 / std::sqrt(static_cast<double>(n));
      for (int c = 0; c < d; ++c) {
        const int m = cols[c];
        for (int k = 0; k < n; ++k) {
          const double phase = -2.0 * M_PI * static_cast<double>(k) * m / n;
          basis(k, c) = scale * std::complex<double>(std::cos(phase), std::sin(phase));
        }
      }
      break;
    }
    case SubspaceDirective::Kind::kIdentity:
      basis = Eigen::MatrixXcd::Identity(n, d);
      break;
    case SubspaceDirective::Kind::kExplicitFile: {
      const json j = detail::load_json_file(directive.path);
      basis = detail::read_complex_matrix(j.at("basis"), directive.path);
      if (basis.rows() != n || basis.cols() != d)
        throw std::invalid_argument(directive.path + ": basis dimensions do not match config");
      if (!has_orthonormal_columns(basis, 1e-10))
        throw std::invalid_argument(directive.path + ": basis columns are not orthonormal");
      break;
    }
  }
  return SubspaceModel(std::move(basis), Eigen::MatrixXcd::Identity(d, d), directive.alphabet);
}

// StructuredInOut builds cov = sigma_out^2 (I - U U^H) + sigma_in^2 U U^H for
// both channels; its square roots follow the same projector mixture in closed
// form (no eigendecomposition).
inline NoiseModel generate_noise(const NoiseDirective& directive, const SystemConfig& cfg,
                                 const SubspaceModel& sub) {
  const int n = cfg.n_samples;
  switch (directive.kind) {
    case NoiseDirective::Kind::kStructuredInOut: {
      if (!(cfg.sigma_in_sq > 0) || !(cfg.sigma_out_sq > 0))
        throw std::invalid_argument("generate_noise: sigma_in_sq and sigma_out_sq must be positive");
      const Eigen::MatrixXcd proj = sub.basis() * sub.basis().adjoint();
      const Eigen::MatrixXcd comp = Eigen::MatrixXcd::Identity(n, n) - proj;
      NoiseModel nm;
      nm.cov_ref = cfg.sigma_out_sq * comp + cfg.sigma_in_sq * proj;
      nm.sqrt_ref = std::sqrt(cfg.sigma_out_sq) * comp + std::sqrt(cfg.sigma_in_sq) * proj;
      nm.inv_sqrt_ref =
          (1.0 / std::sqrt(cfg.sigma_out_sq)) * comp + (1.0 / std::sqrt(cfg.sigma_in_sq)) * proj;
      nm.cov_surv = nm.cov_ref;
      nm.sqrt_surv = nm.sqrt_ref;
      nm.inv_sqrt_surv = nm.inv_sqrt_ref;
      return nm;
    }
    case NoiseDirective::Kind::kIdentity: {
      NoiseModel nm;
      nm.cov_ref = nm.cov_surv = nm.sqrt_ref = nm.sqrt_surv = nm.inv_sqrt_ref = nm.inv_sqrt_surv =
          Eigen::MatrixXcd::Identity(n, n);
      return nm;
    }
    case NoiseDirective::Kind::kExplicitFile: {
      const json j = detail::load_json_file(directive.path);
      return NoiseModel::from_covariances(
          detail::read_complex_matrix(j.at("cov_ref"), directive.path),
          detail::read_complex_matrix(j.at("cov_surv"), directive.path));
    }
  }
  throw std::logic_error("generate_noise: unknown directive");
}

// RingNeighbors: transmitters are receivers 0..M-1; row i has ones at its own
// column i and at the neighbors_per_tx cyclically-next receiver columns.
inline Topology generate_topology(const TopologyDirective& directive, int m, int l,
                                  [[maybe_unused]] RandomStream& stream) {
  switch (directive.kind) {
    case TopologyDirective::Kind::kRingNeighbors: {
      if (m > l)
        throw std::invalid_argument(
            "generate_topology: n_transmitters exceeds n_receivers, self-loops impossible");
      if (directive.neighbors_per_tx < 0 || directive.neighbors_per_tx > l - 1)
        throw std::invalid_argument("generate_topology: neighbors_per_tx must be in [0, n_receivers-1]");
      Eigen::MatrixXi a = Eigen::MatrixXi::Zero(m, l);
      for (int i = 0; i < m; ++i) {
        a(i, i) = 1;
        for (int q = 1; q <= directive.neighbors_per_tx; ++q) a(i, (i + q) % l) = 1;
      }
      return Topology::from_adjacency(std::move(a));
    }
    case TopologyDirective::Kind::kExplicitFile: {
      const json j = detail::load_json_file(directive.path);
      const auto& rows = j.at("adjacency");
      Eigen::MatrixXi a(rows.size(), rows.empty() ? 0 : rows[0].size());
      for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
        if (static_cast<int>(rows[i].size()) != a.cols())
          throw std::invalid_argument(directive.path + ": ragged adjacency matrix");
        for (int c = 0; c < a.cols(); ++c) a(i, c) = rows[i][c].get<int>();
      }
      if (a.rows() != m || a.cols() != l)
        throw std::invalid_argument(directive.path + ": adjacency dimensions do not match config");
      return Topology::from_adjacency(std::move(a));
    }
  }
  throw std::logic_error("generate_topology: unknown directive");
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace detail {

[[noreturn]] inline void config_error(const std::string& path, const std::string& what) {
  throw std::invalid_argument("config error at " + path + ": " + what);
}

template <typename T>
T get_field(const json& j, const std::string& parent, const std::string& key) {
  if (!j.contains(key)) config_error(parent + "." + key, "missing field");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(parent + "." + key, e.what());
  }
}

inline std::complex<double> get_complex(const json& j, const std::string& parent,
                                        const std::string& key) {
  if (!j.contains(key)) config_error(parent + "." + key, "missing field");
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2) config_error(parent + "." + key, "expected [re, im]");
  return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace detail

inline json to_json(const ExperimentSpec& spec) {
  const SystemConfig& c = spec.config;
  json system{{"n_samples", c.n_samples},
              {"subspace_dim", c.subspace_dim},
              {"n_receivers", c.n_receivers},
              {"n_transmitters", c.n_transmitters},
              {"sigma_alpha_sq", c.sigma_alpha_sq},
              {"mu_beta", {c.mu_beta.real(), c.mu_beta.imag()}},
              {"sigma_beta_sq", c.sigma_beta_sq},
              {"sigma_eps_sq", c.sigma_eps_sq},
              {"sigma_eta_sq", c.sigma_eta_sq},
              {"power_budget", c.power_budget},
              {"sigma_in_sq", c.sigma_in_sq},
              {"sigma_out_sq", c.sigma_out_sq},
              {"seed", c.seed}};
  json gains = json::array();
  for (Eigen::Index i = 0; i < c.mac_gain.size(); ++i)
    gains.push_back({c.mac_gain(i).real(), c.mac_gain(i).imag()});
  system["mac_gain"] = std::move(gains);

  const auto subspace_kind = [&] {
    switch (spec.subspace.kind) {
      case SubspaceDirective::Kind::kDftRandomColumns: return "dft_random_columns";
      case SubspaceDirective::Kind::kIdentity: return "identity";
      case SubspaceDirective::Kind::kExplicitFile: return "file";
    }
    return "";
  }();
  const auto noise_kind = [&] {
    switch (spec.noise.kind) {
      case NoiseDirective::Kind::kStructuredInOut: return "structured_in_out";
      case NoiseDirective::Kind::kIdentity: return "identity";
      case NoiseDirective::Kind::kExplicitFile: return "file";
    }
    return "";
  }();
  const auto topology_kind =
      spec.topology.kind == TopologyDirective::Kind::kRingNeighbors ? "ring_neighbors" : "file";
  const auto mode = [&] {
    switch (spec.run.mode) {
      case RunDirective::Mode::kValidateConfig: return "validate-config";
      case RunDirective::Mode::kValidateMoments: return "validate-moments";
      case RunDirective::Mode::kDesignWeights: return "design-weights";
      case RunDirective::Mode::kRoc: return "roc";
      case RunDirective::Mode::kReproduce: return "reproduce";
    }
    return "";
  }();

  return json{
      {"system", std::move(system)},
      {"subspace",
       {{"kind", subspace_kind},
        {"path", spec.subspace.path},
        {"alphabet", spec.subspace.alphabet == SymbolAlphabet::kQpsk ? "qpsk" : "gaussian"}}},
      {"noise", {{"kind", noise_kind}, {"path", spec.noise.path}}},
      {"topology",
       {{"kind", topology_kind},
        {"neighbors_per_tx", spec.topology.neighbors_per_tx},
        {"path", spec.topology.path}}},
      {"run",
       {{"mode", mode},
        {"n_trials", spec.run.n_trials},
        {"figure", spec.run.figure},
        {"baselines", spec.run.baselines},
        {"target_pfa", spec.run.target_pfa}}}};
}

inline ExperimentSpec spec_from_json(const json& j) {
  using detail::config_error;
  using detail::get_complex;
  using detail::get_field;

  ExperimentSpec spec;
  if (!j.contains("system")) config_error("system", "missing section");
  const json& sys = j.at("system");
  SystemConfig& c = spec.config;
  c.n_samples = get_field<int>(sys, "system", "n_samples");
  c.subspace_dim = get_field<int>(sys, "system", "subspace_dim");
  c.n_receivers = get_field<int>(sys, "system", "n_receivers");
  c.n_transmitters = get_field<int>(sys, "system", "n_transmitters");
  c.sigma_alpha_sq = get_field<double>(sys, "system", "sigma_alpha_sq");
  c.mu_beta = get_complex(sys, "system", "mu_beta");
  c.sigma_beta_sq = get_field<double>(sys, "system", "sigma_beta_sq");
  c.sigma_eps_sq = get_field<double>(sys, "system", "sigma_eps_sq");
  c.sigma_eta_sq = get_field<double>(sys, "system", "sigma_eta_sq");
  c.power_budget = get_field<double>(sys, "system", "power_budget");
  c.sigma_in_sq = get_field<double>(sys, "system", "sigma_in_sq");
  c.sigma_out_sq = get_field<double>(sys, "system", "sigma_out_sq");
  c.seed = get_field<std::uint64_t>(sys, "system", "seed");
  if (!sys.contains("mac_gain")) config_error("system.mac_gain", "missing field");
  const auto& gains = sys.at("mac_gain");
  c.mac_gain.resize(gains.size());
  for (std::size_t i = 0; i < gains.size(); ++i) {
    const auto& g = gains[i];
    if (!g.is_array() || g.size() != 2)
      config_error("system.mac_gain[" + std::to_string(i) + "]", "expected [re, im]");
    c.mac_gain(static_cast<Eigen::Index>(i)) =
        std::complex<double>(g[0].get<double>(), g[1].get<double>());
  }

  if (!j.contains("subspace")) config_error("subspace", "missing section");
  const json& sub = j.at("subspace");
  const auto sub_kind = get_field<std::string>(sub, "subspace", "kind");
  if (sub_kind == "dft_random_columns")
    spec.subspace.kind = SubspaceDirective::Kind::kDftRandomColumns;
  else if (sub_kind == "identity")
    spec.subspace.kind = SubspaceDirective::Kind::kIdentity;
  else if (sub_kind == "file")
    spec.subspace.kind = SubspaceDirective::Kind::kExplicitFile;
  else
    config_error("subspace.kind", "unknown kind '" + sub_kind + "'");
  spec.subspace.path = sub.value("path", std::string{});
  const auto alph = sub.value("alphabet", std::string{"gaussian"});
  if (alph == "gaussian")
    spec.subspace.alphabet = SymbolAlphabet::kGaussian;
  else if (alph == "qpsk")
    spec.subspace.alphabet = SymbolAlphabet::kQpsk;
  else
    config_error("subspace.alphabet", "unknown alphabet '" + alph + "'");

  if (!j.contains("noise")) config_error("noise", "missing section");
  const json& noi = j.at("noise");
  const auto noise_kind = get_field<std::string>(noi, "noise", "kind");
  if (noise_kind == "structured_in_out")
    spec.noise.kind = NoiseDirective::Kind::kStructuredInOut;
  else if (noise_kind == "identity")
    spec.noise.kind = NoiseDirective::Kind::kIdentity;
  else if (noise_kind == "file")
    spec.noise.kind = NoiseDirective::Kind::kExplicitFile;
  else
    config_error("noise.kind", "unknown kind '" + noise_kind + "'");
  spec.noise.path = noi.value("path", std::string{});

  if (!j.contains("topology")) config_error("topology", "missing section");
  const json& topo = j.at("topology");
  const auto topo_kind = get_field<std::string>(topo, "topology", "kind");
  if (topo_kind == "ring_neighbors")
    spec.topology.kind = TopologyDirective::Kind::kRingNeighbors;
  else if (topo_kind == "file")
    spec.topology.kind = TopologyDirective::Kind::kExplicitFile;
  else
    config_error("topology.kind", "unknown kind '" + topo_kind + "'");
  spec.topology.neighbors_per_tx = topo.value("neighbors_per_tx", 0);
  spec.topology.path = topo.value("path", std::string{});

  if (!j.contains("run")) config_error("run", "missing section");
  const json& run = j.at("run");
  const auto mode = get_field<std::string>(run, "run", "mode");
  if (mode == "validate-config")
    spec.run.mode = RunDirective::Mode::kValidateConfig;
  else if (mode == "validate-moments")
    spec.run.mode = RunDirective::Mode::kValidateMoments;
  else if (mode == "design-weights")
    spec.run.mode = RunDirective::Mode::kDesignWeights;
  else if (mode == "roc")
    spec.run.mode = RunDirective::Mode::kRoc;
  else if (mode == "reproduce")
    spec.run.mode = RunDirective::Mode::kReproduce;
  else
    config_error("run.mode", "unknown mode '" + mode + "'");
  spec.run.n_trials = run.value("n_trials", 10000L);
  spec.run.figure = run.value("figure", 2);
  spec.run.baselines = run.value("baselines", std::vector<std::string>{});
  spec.run.target_pfa = run.value("target_pfa", 0.1);
  for (const auto& b : spec.run.baselines)
    if (b != "af" && b != "whitening")
      config_error("run.baselines", "unknown baseline '" + b + "'");

  return spec;
}

inline ExperimentSpec load_spec(const std::string& path) {
  return spec_from_json(detail::load_json_file(path));
}

// FNV-1a over the canonical serialized spec; identifies the effective run in
// every emitted artifact.
inline std::uint64_t config_hash(const ExperimentSpec& spec) {
  const std::string dump = to_json(spec).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char ch : dump) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

// Builds the concrete model objects named by the directives. The subspace
// column draw consumes the (seed, 0, kSubspace) stream, so a spec plus a seed
// pins the whole model.
struct ExperimentModel {
  SubspaceModel subspace;
  NoiseModel noise;
  Topology topology;
};

inline ExperimentModel build_model(const ExperimentSpec& spec) {
  ExperimentModel model;
  RandomStream sub_stream = derive_stream(spec.config.seed, 0, StreamTag::kSubspace);
  model.subspace = generate_subspace(spec.subspace, spec.config.n_samples,
                                     spec.config.subspace_dim, sub_stream);
  model.noise = generate_noise(spec.noise, spec.config, model.subspace);
  RandomStream topo_stream = derive_stream(spec.config.seed, 0, StreamTag::kScratch);
  model.topology = generate_topology(spec.topology, spec.config.n_transmitters,
                                     spec.config.n_receivers, topo_stream);
  return model;
}

}  // namespace pradar

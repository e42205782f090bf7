// Noise-whitened subspace transformation and the per-receiver
// cross-correlation statistic
//
//   c_i = (T_r rwh_i)^H  M_U  (T_s swh_i),   rwh = inv_sqrt_ref * r,
//
// with T_r = (U^H inv(cov_ref) U)^{-1} U^H inv_sqrt_ref and M_U =
// U^H inv_sqrt_ref inv_sqrt_surv U. The same statistic also equals the
// bilinear form r^H A s with the N x N kernel
//   A = inv(cov_ref) U C_r M_U C_s U^H inv(cov_surv)
//     = inv_sqrt_ref P_ref P_surv inv_sqrt_surv,
// where P_ref is the orthogonal projector onto the whitened subspace
// span(inv_sqrt_ref U). This is the form the moment analysis rests on. Both
// formulations are provided; they must agree, and the test suite holds them
// to that.

#pragma once

#include <stdexcept>

#include <Eigen/Dense>

#include "pradar/linalg.hpp"
#include "pradar/signal.hpp"
#include "pradar/types.hpp"

namespace pradar {

struct CcKernel {
  Eigen::MatrixXcd t_ref;   // D x N, subspace transform of whitened reference
  Eigen::MatrixXcd t_surv;  // D x N
  Eigen::MatrixXcd m_u;     // D x D
  Eigen::MatrixXcd c_ref;   // D x D, (U^H inv(cov_ref) U)^{-1}
  Eigen::MatrixXcd c_surv;  // D x D
  Eigen::MatrixXcd kernel_a;  // N x N bilinear kernel

  // Combined whiten+transform maps applied directly to raw measurements:
  // proj_ref = t_ref * inv_sqrt_ref. Cached because every trial uses them.
  Eigen::MatrixXcd proj_ref;   // D x N
  Eigen::MatrixXcd proj_surv;  // D x N
};

inline CcKernel build_kernel(const SubspaceModel& sub, const NoiseModel& noise) {
  const Eigen::MatrixXcd& u = sub.basis();

  const Eigen::MatrixXcd inv_ref = noise.inv_sqrt_ref * noise.inv_sqrt_ref;
  const Eigen::MatrixXcd inv_surv = noise.inv_sqrt_surv * noise.inv_sqrt_surv;

  CcKernel k;
  k.c_ref = hermitian_inverse(u.adjoint() * inv_ref * u,
                              "reference channel: U^H inv(cov) U");
  k.c_surv = hermitian_inverse(u.adjoint() * inv_surv * u,
                               "surveillance channel: U^H inv(cov) U");
  k.t_ref = k.c_ref * u.adjoint() * noise.inv_sqrt_ref;
  k.t_surv = k.c_surv * u.adjoint() * noise.inv_sqrt_surv;
  k.m_u = u.adjoint() * noise.inv_sqrt_ref * noise.inv_sqrt_surv * u;
  k.kernel_a = inv_ref * u * k.c_ref * k.m_u * k.c_surv * u.adjoint() * inv_surv;
  k.proj_ref = k.t_ref * noise.inv_sqrt_ref;
  k.proj_surv = k.t_surv * noise.inv_sqrt_surv;
  return k;
}

// Transform-path statistic, one entry per receiver.
inline Eigen::VectorXcd cross_correlate(const CcKernel& kernel, const ChannelMeasurements& meas) {
  const Eigen::MatrixXcd r_t = kernel.proj_ref * meas.ref;    // D x L
  const Eigen::MatrixXcd s_t = kernel.m_u * (kernel.proj_surv * meas.surv);
  const Eigen::Index l = meas.ref.cols();
  Eigen::VectorXcd c(l);
  for (Eigen::Index i = 0; i < l; ++i) c(i) = r_t.col(i).dot(s_t.col(i));
  return c;
}

// Kernel-path statistic c_i = r_i^H A s_i. Kept as an independent route for
// cross-checking the transform path.
inline Eigen::VectorXcd cross_correlate_via_kernel(const CcKernel& kernel,
                                                   const ChannelMeasurements& meas) {
  const Eigen::MatrixXcd a_s = kernel.kernel_a * meas.surv;  // N x L
  const Eigen::Index l = meas.ref.cols();
  Eigen::VectorXcd c(l);
  for (Eigen::Index i = 0; i < l; ++i) c(i) = meas.ref.col(i).dot(a_s.col(i));
  return c;
}

}  // namespace pradar

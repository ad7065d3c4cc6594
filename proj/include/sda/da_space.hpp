#pragma once

#include <cstdint>

#include "sda/grid.hpp"
#include "sda/heisenberg.hpp"

namespace sda {

/// Parameters of the DA_(n) realization; requires 2n > d.
struct KernelParams {
  int d = 1;
  int n = 1;

  void validate() const;
  /// gamma_{d,n} = 4^n / ((4 pi)^{d+1} Gamma(2n - d)).
  double gamma_const() const;
};

/// Pointwise synthesis
///   (S phi)(p) = (2pi)^{-(d+1)} sum_alpha sum_nodes
///                  zeta^alpha e^{-i lambda zeta_{d+1}} conj(phi) |lambda|^d w.
/// Conjugate-linear in phi. Requires p interior (rho > 0).
cplx synthesize(const CoeffFunction& phi, const SiegelPoint& p);

/// Reproducing kernel gamma_{d,n} ((w_{d+1} - conj z_{d+1})/2i - w.conj z/4)^{-1}.
/// Hermitian; real and positive on the diagonal. Both points must be
/// interior; a denominator below 1e-14 raises SingularityError.
cplx kernel(const SiegelPoint& w, const SiegelPoint& z, const KernelParams& kp);

/// Coefficient function of K(., w) under the L^2(dmu) isometry convention:
///   phi_K(alpha, lambda) = (2pi)^{-(d+1)} w^alpha e^{-i lambda w_{d+1}}
///                            |lambda|^{-d} (|lambda|/2)^{|alpha|} / alpha!.
/// Exact contract: inner_product(phi_K, phi) == synthesize(phi, w) on the
/// same grid. Pointwise, synthesize(phi_K, z) matches kernel(z, w) up to
/// the single global normalization constant 2 gamma_{d,n} (2pi)^{2(d+1)}
/// and grid truncation.
CoeffFunction kernel_coefficients(const SiegelPoint& w, const GridSpec& grid,
                                  const KernelParams& kp);

/// Predicted ratio kernel(z,w) / synthesize(phi_K, z).
double kernel_reproduction_constant(const KernelParams& kp);

/// Integration box for the direct DA-norm quadrature, in (z, t, h)
/// coordinates. t_halfwidth <= 0 selects half of one exact t-period
/// (pi / grid spacing) of the lattice synthesis.
struct IntegrationBox {
  double z_halfwidth = 6.0;
  double h_max = 12.0;
  double t_halfwidth = 0.0;
};

struct DaNormEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
};

/// Definition-level DA_(n) norm squared of S phi by Monte-Carlo integration
/// of |rho^n d^n_{zeta_{d+1}} S phi|^2 rho^{-d-1} over the box. Only
/// d = 1, n = 1 is supported; the derivative is exact (coefficient
/// multiplication by i lambda). Deterministic for a fixed seed.
DaNormEstimate da_norm_direct(const CoeffFunction& phi, const KernelParams& kp,
                              std::uint64_t mc_samples, const IntegrationBox& box,
                              std::uint64_t seed = 20240101);

/// Expected ratio da_norm_direct / grid norm^2:
///   Gamma(2n-d) / (2^{2n-d} (2pi)^{d+1}).
double da_norm_direct_constant(const KernelParams& kp);

/// Coefficients of the exact derivative d_{zeta_{d+1}} S phi = S(i lambda phi).
CoeffFunction multiply_by_ilambda(const CoeffFunction& phi, int power = 1);

}  // namespace sda

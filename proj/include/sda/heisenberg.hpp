#pragma once

#include <complex>
#include <vector>

#include "sda/multi_index.hpp"

namespace sda {

using cplx = std::complex<double>;

/// A point (zeta, zeta_{d+1}) of C^{d+1}; interior of the Siegel half-space
/// iff rho > 0.
struct SiegelPoint {
  std::vector<cplx> zeta;
  cplx zeta_last;

  int d() const { return static_cast<int>(zeta.size()); }
};

/// Boundary group element [z, t].
struct HeisenbergElement {
  std::vector<cplx> z;
  double t = 0.0;

  int d() const { return static_cast<int>(z.size()); }
  static HeisenbergElement identity(int d) { return {std::vector<cplx>(d, cplx(0.0)), 0.0}; }
};

/// Defining function rho(zeta, zeta_{d+1}) = Im zeta_{d+1} - |zeta|^2 / 4.
double rho(const SiegelPoint& p);

inline bool is_interior(const SiegelPoint& p) { return rho(p) > 0.0; }

/// Group product [w,s][z,t] = [w+z, s+t - Im(w . conj z)/2].
HeisenbergElement hgroup_mul(const HeisenbergElement& a, const HeisenbergElement& b);

HeisenbergElement hgroup_inverse(const HeisenbergElement& a);

/// Biholomorphic boundary action
///   Phi_{[z,t]}(w, w_{d+1}) = (w+z, w_{d+1} + t + i|z|^2/4 + (i/2) w . conj z).
/// Preserves rho; composes as Phi_g(Phi_g'(p)) = Phi_{g' g}(p).
SiegelPoint phi_action(const HeisenbergElement& g, const SiegelPoint& p);

/// Cayley transform from the unit ball of C^{d+1},
///   (w, w_{d+1}) -> (2w/(1 - w_{d+1}), i(1 + w_{d+1})/(1 - w_{d+1})).
/// Requires |w| < 1; w_{d+1} = 1 is the pole.
SiegelPoint cayley(const std::vector<cplx>& omega, cplx omega_last);

/// Calibrated exponent of the (|lambda|/2pi) factor in the lowest-weight
/// matrix element. Zero makes the coefficient-space inversion formula
/// self-consistent; see bargmann_lowest_row and its cross-check test.
inline constexpr int kBargmannExponentDefault = 0;

/// Scalar coefficient of e_0 in P_0 sigma_lambda[z,t] e_alpha:
///   (1/sqrt(alpha!)) (|lambda|/2)^{|alpha|/2} (|lambda|/2pi)^{n_exp}
///     e^{i lambda t + (lambda/4)|z|^2} conj(z)^alpha.
/// Only lambda < 0 is implemented (the transform side vanishes for
/// lambda > 0 in this picture). The exponent n_exp of the (|lambda|/2pi)
/// power is caller-supplied; kBargmannExponentDefault is the value
/// calibrated against the inversion formula.
cplx bargmann_lowest_row(double lambda, const HeisenbergElement& g, const MultiIndex& alpha,
                         int n_exp);

}  // namespace sda

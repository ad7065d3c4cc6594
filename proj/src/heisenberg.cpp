#include "sda/heisenberg.hpp"

#include <cmath>
#include <stdexcept>

namespace sda {

namespace {

double abs_sq(const std::vector<cplx>& v) {
  double s = 0.0;
  for (const cplx& x : v) s += std::norm(x);
  return s;
}

/// w . conj(z) = sum w_j conj(z_j)
cplx dot_conj(const std::vector<cplx>& w, const std::vector<cplx>& z) {
  cplx s(0.0);
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * std::conj(z[i]);
  return s;
}

}  // namespace

double rho(const SiegelPoint& p) { return p.zeta_last.imag() - 0.25 * abs_sq(p.zeta); }

HeisenbergElement hgroup_mul(const HeisenbergElement& a, const HeisenbergElement& b) {
  if (a.d() != b.d()) throw std::invalid_argument("hgroup_mul: dimension mismatch");
  HeisenbergElement r;
  r.z.resize(a.z.size());
  for (std::size_t i = 0; i < a.z.size(); ++i) r.z[i] = a.z[i] + b.z[i];
  r.t = a.t + b.t - 0.5 * dot_conj(a.z, b.z).imag();
  return r;
}

HeisenbergElement hgroup_inverse(const HeisenbergElement& a) {
  HeisenbergElement r;
  r.z.resize(a.z.size());
  for (std::size_t i = 0; i < a.z.size(); ++i) r.z[i] = -a.z[i];
  r.t = -a.t;
  return r;
}

SiegelPoint phi_action(const HeisenbergElement& g, const SiegelPoint& p) {
  if (g.d() != p.d()) throw std::invalid_argument("phi_action: dimension mismatch");
  SiegelPoint r;
  r.zeta.resize(p.zeta.size());
  for (std::size_t i = 0; i < p.zeta.size(); ++i) r.zeta[i] = p.zeta[i] + g.z[i];
  r.zeta_last = p.zeta_last + g.t + cplx(0.0, 0.25 * abs_sq(g.z)) +
                cplx(0.0, 0.5) * dot_conj(p.zeta, g.z);
  return r;
}

SiegelPoint cayley(const std::vector<cplx>& omega, cplx omega_last) {
  double n2 = abs_sq(omega) + std::norm(omega_last);
  if (!(n2 < 1.0)) throw std::domain_error("cayley: point must lie in the open unit ball");
  const cplx den = cplx(1.0) - omega_last;
  if (std::abs(den) < 1e-14) throw std::domain_error("cayley: pole at omega_{d+1} = 1");
  SiegelPoint r;
  r.zeta.resize(omega.size());
  for (std::size_t i = 0; i < omega.size(); ++i) r.zeta[i] = 2.0 * omega[i] / den;
  r.zeta_last = cplx(0.0, 1.0) * (cplx(1.0) + omega_last) / den;
  return r;
}

cplx bargmann_lowest_row(double lambda, const HeisenbergElement& g, const MultiIndex& alpha,
                         int n_exp) {
  if (!(lambda < 0.0)) throw std::domain_error("bargmann_lowest_row: lambda must be < 0");
  if (g.d() != alpha.dim()) throw std::invalid_argument("bargmann_lowest_row: dimension mismatch");
  const double al = -lambda;
  double scale = std::pow(0.5 * al, 0.5 * alpha.order()) / std::sqrt(factorial(alpha));
  scale *= std::pow(al / (2.0 * M_PI), n_exp);
  cplx zbar_pow(1.0);
  for (int i = 0; i < alpha.dim(); ++i) {
    for (int k = 0; k < alpha[i]; ++k) zbar_pow *= std::conj(g.z[i]);
  }
  const cplx phase = std::exp(cplx(0.25 * lambda * abs_sq(g.z), lambda * g.t));
  return scale * phase * zbar_pow;
}

}  // namespace sda

#include "sda/da_space.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sda/errors.hpp"
#include "sda/rng.hpp"

namespace sda {

void KernelParams::validate() const {
  if (d < 1) throw std::invalid_argument("KernelParams: d must be >= 1");
  if (2 * n <= d) throw std::invalid_argument("KernelParams: need 2n > d");
}

double KernelParams::gamma_const() const {
  validate();
  return std::pow(4.0, n) / (std::pow(4.0 * M_PI, d + 1) * std::tgamma(2.0 * n - d));
}

namespace {

cplx power(cplx base, int e) {
  cplx r(1.0);
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

cplx zeta_pow(const SiegelPoint& p, const MultiIndex& a) {
  cplx r(1.0);
  for (int i = 0; i < a.dim(); ++i) r *= power(p.zeta[i], a[i]);
  return r;
}

}  // namespace

cplx synthesize(const CoeffFunction& phi, const SiegelPoint& p) {
  const GridSpec& g = phi.grid();
  if (p.d() != g.d) throw std::invalid_argument("synthesize: point dimension mismatch");
  if (!(rho(p) > 0.0)) throw std::domain_error("synthesize: point must be interior (rho > 0)");
  const int nn = phi.n_nodes();
  // lambda-dependent factor e^{-i lambda zeta_{d+1}} |lambda|^d w_j, hoisted
  // across alpha rows.
  std::vector<cplx> lam_factor(nn);
  for (int j = 0; j < nn; ++j) {
    const double lam = g.node(j);
    lam_factor[j] = std::exp(cplx(0.0, -lam) * p.zeta_last) * std::pow(-lam, g.d) *
                    g.node_weight(j);
  }
  cplx acc(0.0);
  for (int ai = 0; ai < phi.n_alpha(); ++ai) {
    const cplx* row = phi.row(ai);
    cplx dot(0.0);
    for (int j = 0; j < nn; ++j) dot += lam_factor[j] * std::conj(row[j]);
    acc += zeta_pow(p, phi.layout().alpha(ai)) * dot;
  }
  return acc * std::pow(2.0 * M_PI, -(g.d + 1));
}

cplx kernel(const SiegelPoint& w, const SiegelPoint& z, const KernelParams& kp) {
  kp.validate();
  if (w.d() != kp.d || z.d() != kp.d) throw std::invalid_argument("kernel: dimension mismatch");
  if (!(rho(w) > 0.0) || !(rho(z) > 0.0)) {
    throw std::domain_error("kernel: both points must be interior");
  }
  cplx wz(0.0);
  for (int i = 0; i < kp.d; ++i) wz += w.zeta[i] * std::conj(z.zeta[i]);
  const cplx den = (w.zeta_last - std::conj(z.zeta_last)) / cplx(0.0, 2.0) - 0.25 * wz;
  if (std::abs(den) < 1e-14) throw SingularityError("kernel: vanishing denominator");
  return kp.gamma_const() / den;
}

CoeffFunction kernel_coefficients(const SiegelPoint& w, const GridSpec& grid,
                                  const KernelParams& kp) {
  kp.validate();
  if (w.d() != grid.d) throw std::invalid_argument("kernel_coefficients: dimension mismatch");
  if (!(rho(w) > 0.0)) throw std::domain_error("kernel_coefficients: w must be interior");
  CoeffFunction out(grid);
  const int nn = out.n_nodes();
  const double pref = std::pow(2.0 * M_PI, -(grid.d + 1));
  std::vector<cplx> base(nn);   // pref * e^{-i lambda w_{d+1}} |lambda|^{-d}
  std::vector<double> half_lam(nn);
  for (int j = 0; j < nn; ++j) {
    const double lam = grid.node(j);
    base[j] = pref * std::exp(cplx(0.0, -lam) * w.zeta_last) * std::pow(-lam, -grid.d);
    half_lam[j] = 0.5 * (-lam);
  }
  for (int ai = 0; ai < out.n_alpha(); ++ai) {
    const MultiIndex& a = out.layout().alpha(ai);
    const cplx wa = zeta_pow(w, a) / factorial(a);
    const int k = a.order();
    cplx* row = out.row(ai);
    for (int j = 0; j < nn; ++j) {
      row[j] = wa * base[j] * std::pow(half_lam[j], k);
    }
  }
  return out;
}

double kernel_reproduction_constant(const KernelParams& kp) {
  return 2.0 * kp.gamma_const() * std::pow(2.0 * M_PI, 2 * (kp.d + 1));
}

CoeffFunction multiply_by_ilambda(const CoeffFunction& phi, int power) {
  CoeffFunction out = phi;
  const GridSpec& g = phi.grid();
  for (int ai = 0; ai < out.n_alpha(); ++ai) {
    cplx* row = out.row(ai);
    for (int j = 0; j < out.n_nodes(); ++j) {
      cplx f(1.0);
      for (int p = 0; p < power; ++p) f *= cplx(0.0, g.node(j));
      row[j] *= f;
    }
  }
  return out;
}

DaNormEstimate da_norm_direct(const CoeffFunction& phi, const KernelParams& kp,
                              std::uint64_t mc_samples, const IntegrationBox& box,
                              std::uint64_t seed) {
  kp.validate();
  if (kp.d != 1 || kp.n != 1) {
    throw UnsupportedConfigError("da_norm_direct: only d = 1, n = 1 is supported");
  }
  if (phi.grid().d != 1) throw UnsupportedConfigError("da_norm_direct: phi must live on a d=1 grid");
  if (mc_samples == 0) throw std::invalid_argument("da_norm_direct: need at least one sample");

  const GridSpec& g = phi.grid();
  // Support list of the derivative coefficients. Synthesis evaluates
  //   dF(zeta) = (2pi)^{-2} sum_k zeta^{a_k} e^{-i lambda_k zeta_2} c_k,
  // with c_k = conj(i lambda phi) |lambda|^d w.
  struct Term {
    int alpha;
    double lambda;
    cplx c;
  };
  std::vector<Term> terms;
  const double pref = std::pow(2.0 * M_PI, -(g.d + 1));
  for (int ai = 0; ai < phi.n_alpha(); ++ai) {
    const int a0 = phi.layout().alpha(ai)[0];
    for (int j = 0; j < phi.n_nodes(); ++j) {
      const cplx v = phi.at(ai, j);
      if (v == cplx(0.0)) continue;
      const double lam = g.node(j);
      terms.push_back({a0, lam,
                       pref * std::conj(cplx(0.0, lam) * v) * std::pow(-lam, g.d) *
                           g.node_weight(j)});
    }
  }
  // The lattice synthesis is exactly periodic in t with period 2 pi / h;
  // integrating t over one period reproduces the full-line Plancherel mass
  // of the step-interpretation of phi.
  const double t_half = box.t_halfwidth > 0.0 ? box.t_halfwidth : M_PI / g.spacing;
  const double volume = (2.0 * box.z_halfwidth) * (2.0 * box.z_halfwidth) * (2.0 * t_half) *
                        box.h_max;

  Rng rng(seed);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::uint64_t s = 0; s < mc_samples; ++s) {
    const double x = rng.uniform(-box.z_halfwidth, box.z_halfwidth);
    const double y = rng.uniform(-box.z_halfwidth, box.z_halfwidth);
    const double t = rng.uniform(-t_half, t_half);
    const double hc = rng.uniform(0.0, box.h_max);
    const cplx z(x, y);
    const cplx zeta2(t, 0.25 * std::norm(z) + hc);
    cplx df(0.0);
    for (const Term& tm : terms) {
      df += power(z, tm.alpha) * std::exp(cplx(0.0, -tm.lambda) * zeta2) * tm.c;
    }
    const double f = std::norm(df);
    sum += f;
    sum_sq += f * f;
  }
  const double n = static_cast<double>(mc_samples);
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean);
  DaNormEstimate est;
  est.value = volume * mean;
  est.std_error = volume * std::sqrt(var / n);
  est.samples = mc_samples;
  return est;
}

double da_norm_direct_constant(const KernelParams& kp) {
  kp.validate();
  return std::tgamma(2.0 * kp.n - kp.d) /
         (std::pow(2.0, 2 * kp.n - kp.d) * std::pow(2.0 * M_PI, kp.d + 1));
}

}  // namespace sda

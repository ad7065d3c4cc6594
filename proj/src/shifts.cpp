#include "sda/shifts.hpp"

#include <cmath>
#include <stdexcept>

#include "sda/errors.hpp"
#include "sda/rng.hpp"

namespace sda {

void ShiftSymbol::validate() const {
  for (const Term& t : terms) {
    if (t.tau > 0.0) throw std::invalid_argument("ShiftSymbol: tau must be <= 0");
    if (t.tau == 0.0 && t.gamma.order() != 0) {
      throw std::invalid_argument(
          "ShiftSymbol: tau = 0 with gamma != 0 is the unbounded coordinate multiplier");
    }
    if (!terms.empty() && t.gamma.dim() != terms.front().gamma.dim()) {
      throw std::invalid_argument("ShiftSymbol: mixed dimensions");
    }
  }
}

ShiftSymbol ShiftSymbol::from_polynomial(const std::vector<std::pair<cplx, MultiIndex>>& coeffs,
                                         const std::vector<double>& taus) {
  ShiftSymbol sym;
  for (const auto& [c, gamma] : coeffs) {
    if (gamma.dim() != static_cast<int>(taus.size())) {
      throw std::invalid_argument("from_polynomial: gamma/tau dimension mismatch");
    }
    double tau_gamma = 0.0;
    for (int j = 0; j < gamma.dim(); ++j) tau_gamma += gamma[j] * taus[j];
    sym.terms.push_back({c, gamma, tau_gamma});
  }
  sym.validate();
  return sym;
}

nlohmann::json ShiftSymbol::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const Term& t : terms) {
    arr.push_back({{"c_re", t.c.real()},
                   {"c_im", t.c.imag()},
                   {"gamma", t.gamma.entries()},
                   {"tau", t.tau}});
  }
  return arr;
}

ShiftSymbol ShiftSymbol::from_json(const nlohmann::json& j) {
  ShiftSymbol sym;
  for (const auto& e : j) {
    ShiftSymbol::Term t{cplx(e.at("c_re").get<double>(), e.at("c_im").get<double>()),
                        MultiIndex(e.at("gamma").get<std::vector<int>>()),
                        e.at("tau").get<double>()};
    sym.terms.push_back(std::move(t));
  }
  sym.validate();
  return sym;
}

int shift_steps(double tau, const GridSpec& grid) {
  if (!(tau < 0.0)) throw std::invalid_argument("shift: tau must be < 0");
  const double md = -tau / grid.spacing;
  const long long m = std::llround(md);
  if (m < 1 || std::abs(tau + static_cast<double>(m) * grid.spacing) >
                   1e-9 * std::max(grid.spacing, -tau)) {
    throw std::invalid_argument("shift: tau must be an exact grid multiple -m*h (no interpolation)");
  }
  return static_cast<int>(m);
}

namespace {

void shift_apply_accumulate(cplx scale, const ShiftParams& sp, const CoeffFunction& phi,
                            CoeffFunction& out) {
  const GridSpec& g = phi.grid();
  const int m = shift_steps(sp.tau, g);
  const int nn = phi.n_nodes();
  const GridLayout& layout = phi.layout();
  for (int ai = 0; ai < phi.n_alpha(); ++ai) {
    const MultiIndex& a = layout.alpha(ai);
    if (!a.dominates(sp.gamma)) continue;
    const int si = layout.index_of(a.minus(sp.gamma));
    const cplx* src = phi.row(si);
    cplx* dst = out.row(ai);
    for (int j = m; j < nn; ++j) {
      const double lam = g.node(j);
      const double w = std::pow((lam - sp.tau) / lam, g.d);  // |lambda-tau|^d/|lambda|^d
      dst[j] += scale * w * src[j - m];
    }
  }
}

void shift_adjoint_accumulate(cplx scale, const ShiftParams& sp, const CoeffFunction& phi,
                              CoeffFunction& out) {
  const GridSpec& g = phi.grid();
  const int m = shift_steps(sp.tau, g);
  const int nn = phi.n_nodes();
  const GridLayout& layout = phi.layout();
  const int gk = sp.gamma.order();
  const double two_pow = std::pow(2.0, gk);
  for (int ai = 0; ai < phi.n_alpha(); ++ai) {
    const MultiIndex& a = layout.alpha(ai);
    const int si = layout.index_of(a.plus(sp.gamma));
    if (si < 0) continue;  // alpha+gamma beyond the truncation reads zero
    const int ak = a.order();
    const double rf = factorial_ratio(a, sp.gamma) * two_pow;
    const cplx* src = phi.row(si);
    cplx* dst = out.row(ai);
    for (int j = 0; j + m < nn; ++j) {
      const double lam = -g.node(j);        // |lambda|
      const double lam_t = -g.node(j + m);  // |lambda+tau|
      const double w = std::pow(lam_t, g.d - ak - gk) * std::pow(lam, ak - g.d);
      dst[j] += scale * (w * rf) * src[j + m];
    }
  }
}

}  // namespace

CoeffFunction shift_apply(const ShiftParams& sp, const CoeffFunction& phi) {
  if (sp.gamma.dim() != phi.grid().d) throw std::invalid_argument("shift: dimension mismatch");
  CoeffFunction out(phi.layout_ptr(), std::vector<cplx>(phi.size(), cplx(0.0)));
  shift_apply_accumulate(cplx(1.0), sp, phi, out);
  return out;
}

CoeffFunction shift_adjoint_apply(const ShiftParams& sp, const CoeffFunction& phi) {
  if (sp.gamma.dim() != phi.grid().d) throw std::invalid_argument("shift: dimension mismatch");
  CoeffFunction out(phi.layout_ptr(), std::vector<cplx>(phi.size(), cplx(0.0)));
  shift_adjoint_accumulate(cplx(1.0), sp, phi, out);
  return out;
}

CoeffFunction exp_mult_apply(double tau, const CoeffFunction& phi) {
  return shift_apply({MultiIndex::zero(phi.grid().d), tau}, phi);
}

CoeffFunction symbol_apply(const ShiftSymbol& sym, const CoeffFunction& phi, bool adjoint) {
  sym.validate();
  CoeffFunction out(phi.layout_ptr(), std::vector<cplx>(phi.size(), cplx(0.0)));
  for (const ShiftSymbol::Term& t : sym.terms) {
    if (t.gamma.dim() != phi.grid().d) throw std::invalid_argument("symbol: dimension mismatch");
    const cplx c = adjoint ? std::conj(t.c) : t.c;
    if (t.tau == 0.0) {
      // identity multiplier (constant term)
      for (std::size_t i = 0; i < out.size(); ++i) {
        out.row(0)[i] += c * phi.row(0)[i];
      }
      continue;
    }
    const ShiftParams sp{t.gamma, t.tau};
    if (adjoint) {
      shift_adjoint_accumulate(c, sp, phi, out);
    } else {
      shift_apply_accumulate(c, sp, phi, out);
    }
  }
  return out;
}

double truncated_operator_norm(const ShiftSymbol& sym, const GridSpec& grid, double tol,
                               int max_iter) {
  sym.validate();
  if (sym.terms.empty()) return 0.0;
  CoeffFunction x = random_coeff_function(grid, 0x5da9e11eULL);
  {
    const double nx = norm(x);
    x *= cplx(1.0 / nx);
  }
  double sigma_prev = -1.0;
  int stable = 0;
  double sigma = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    CoeffFunction y = symbol_apply(sym, x, /*adjoint=*/false);
    const double ny2 = norm_sq(y);
    sigma = std::sqrt(ny2);  // ||T x|| with ||x|| = 1
    if (ny2 == 0.0) return 0.0;
    CoeffFunction z = symbol_apply(sym, y, /*adjoint=*/true);
    const double nz = norm(z);
    if (nz == 0.0) return sigma;
    z *= cplx(1.0 / nz);
    x = std::move(z);
    if (sigma_prev >= 0.0 && std::abs(sigma - sigma_prev) <= tol * std::max(1.0, sigma)) {
      if (++stable >= 2) return sigma;
    } else {
      stable = 0;
    }
    sigma_prev = sigma;
  }
  throw ConvergenceError("truncated_operator_norm: power iteration did not converge", sigma,
                         max_iter);
}

MultiplierBound multiplier_norm_bound(const MultiIndex& gamma, double tau, int scan_cap) {
  const int gk = gamma.order();
  if (gk == 0) return {1.0, 1.0};
  if (!(tau < 0.0)) throw std::domain_error("multiplier_norm_bound: tau must be < 0");
  const double T = -tau;
  const double two_pow = std::pow(2.0, gk);
  const double gfact = factorial(gamma);

  // alpha = 0 branch: the weight decreases in |lambda|; endpoint lambda -> 0
  // gives gamma! (2/|tau|)^{|gamma|}.
  double best = gfact * std::pow(2.0 / T, gk);

  // Only coordinates in the support of gamma matter for (alpha+gamma)!/alpha!;
  // for fixed |alpha| the ratio is maximized with all mass on supp(gamma).
  std::vector<int> supp;
  for (int i = 0; i < gamma.dim(); ++i) {
    if (gamma[i] > 0) supp.push_back(i);
  }

  for (int k = 1; k <= scan_cap; ++k) {
    const double lam_star = static_cast<double>(k) * T / gk;
    const double log_lam_factor =
        k * std::log(lam_star) - (k + gk) * std::log(lam_star + T);
    const double lam_factor = std::exp(log_lam_factor);
    // enumerate compositions of k over supp(gamma)
    double best_rf = 0.0;
    if (supp.size() == 1) {
      std::vector<int> e(gamma.dim(), 0);
      e[supp[0]] = k;
      best_rf = factorial_ratio(MultiIndex(e), gamma);
    } else {
      // recursive lambda over supp coordinates
      std::vector<int> e(gamma.dim(), 0);
      auto rec = [&](auto&& self, std::size_t pos, int remaining) -> void {
        if (pos == supp.size() - 1) {
          e[supp[pos]] = remaining;
          best_rf = std::max(best_rf, factorial_ratio(MultiIndex(e), gamma));
          return;
        }
        for (int v = 0; v <= remaining; ++v) {
          e[supp[pos]] = v;
          self(self, pos + 1, remaining - v);
        }
      };
      rec(rec, 0, k);
    }
    best = std::max(best, two_pow * lam_factor * best_rf);
  }

  // |alpha| -> infinity tail: the lambda-maximized weight tends to
  // (2/|tau|)^{|gamma|} e^{-|gamma|} prod gamma_i^{gamma_i}; for k > cap the
  // remaining drift is bounded by exp(|gamma|^2 / (2(cap+1))).
  double prod_gg = 1.0;
  for (int i = 0; i < gamma.dim(); ++i) {
    for (int s = 0; s < gamma[i]; ++s) prod_gg *= static_cast<double>(gamma[i]);
  }
  const double tail = std::pow(2.0 / T, gk) * std::exp(-gk) * prod_gg *
                      std::exp(static_cast<double>(gk) * gk / (2.0 * (scan_cap + 1)));
  best = std::max(best, tail);

  MultiplierBound b;
  b.sup_bound = best;
  const double base = gfact * std::pow(2.0 / T, gk);
  b.closed_form =
      std::max(base, base * std::tgamma(static_cast<double>(gk) + 1.0) /
                         std::sqrt(2.0 * M_PI * gk));
  return b;
}

double symbol_norm_bound(const ShiftSymbol& sym) {
  sym.validate();
  double s = 0.0;
  for (const ShiftSymbol::Term& t : sym.terms) {
    if (t.gamma.order() == 0) {
      s += std::abs(t.c);  // E_tau is a contraction; the identity has norm 1
    } else {
      const MultiplierBound b = multiplier_norm_bound(t.gamma, t.tau);
      s += std::abs(t.c) * std::sqrt(std::min(b.sup_bound, b.closed_form));
    }
  }
  return s;
}

}  // namespace sda

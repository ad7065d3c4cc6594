#pragma once

#include <complex>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "sda/multi_index.hpp"

#include "json.hpp"

namespace sda {

using cplx = std::complex<double>;

enum class QuadratureRule { RiemannMidpoint, Trapezoid };

std::string to_string(QuadratureRule rule);
QuadratureRule quadrature_rule_from_string(const std::string& s);

/// Truncated uniform discretization of N_0^d x R_-.
///
/// Lambda nodes are {-h, -2h, ..., lambda_min} with lambda_min = -K*h for an
/// integer K >= 2; alpha runs over all multi-indices with |alpha| <= alpha_max.
/// Shift parameters tau acting on this grid must be exact node translations,
/// tau = -m*h with integer m >= 1 (no interpolation anywhere).
struct GridSpec {
  int d = 1;
  int alpha_max = 4;
  double lambda_min = -1.0;
  double spacing = 0.5;
  QuadratureRule rule = QuadratureRule::RiemannMidpoint;

  /// Throws std::invalid_argument unless lambda_min = -K*spacing, K >= 2.
  void validate() const;

  int node_count() const;
  /// lambda_j = -(j+1)*spacing, j = 0..K-1; all strictly negative.
  double node(int j) const { return -(static_cast<double>(j) + 1.0) * spacing; }
  /// Quadrature weight of node j under `rule`.
  double node_weight(int j) const;

  bool operator==(const GridSpec& o) const;
  bool operator!=(const GridSpec& o) const { return !(*this == o); }

  nlohmann::json to_json() const;
  static GridSpec from_json(const nlohmann::json& j);
};

/// Shared immutable layout data derived from a GridSpec: the multi-index
/// enumeration and lookup. Built once, shared by every CoeffFunction on the
/// same grid.
class GridLayout {
 public:
  explicit GridLayout(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  int n_alpha() const { return static_cast<int>(alphas_.size()); }
  int n_nodes() const { return n_nodes_; }
  const MultiIndex& alpha(int i) const { return alphas_[i]; }
  const std::vector<MultiIndex>& alphas() const { return alphas_; }

  /// Index of `a` in the enumeration, or -1 if |a| > alpha_max.
  int index_of(const MultiIndex& a) const;

  static std::shared_ptr<const GridLayout> make(const GridSpec& spec);

 private:
  GridSpec spec_;
  int n_nodes_;
  std::vector<MultiIndex> alphas_;
  std::vector<int> shell_begin_;  // first index of each |alpha| = k block
};

/// mu-density of Eq-style weight alpha! (2/|lambda|)^{|alpha|} |lambda|^{2d}.
/// Requires lambda < 0; overflow beyond double range raises std::range_error.
double mu_weight(const MultiIndex& alpha, double lambda, int d);

/// Fock monomial norm squared alpha! (2/|lambda|)^{|alpha|}; lambda != 0.
double fock_norm_sq(const MultiIndex& alpha, double lambda);

/// A coefficient function phi(alpha, lambda) on a truncated grid.
/// Immutable layout; values owned. Storage is row-major per alpha.
class CoeffFunction {
 public:
  explicit CoeffFunction(const GridSpec& spec);
  CoeffFunction(std::shared_ptr<const GridLayout> layout, std::vector<cplx> values);

  const GridSpec& grid() const { return layout_->spec(); }
  const GridLayout& layout() const { return *layout_; }
  std::shared_ptr<const GridLayout> layout_ptr() const { return layout_; }

  int n_alpha() const { return layout_->n_alpha(); }
  int n_nodes() const { return layout_->n_nodes(); }
  std::size_t size() const { return values_.size(); }

  cplx at(int alpha_idx, int node) const {
    return values_[static_cast<std::size_t>(alpha_idx) * n_nodes() + node];
  }
  void set(int alpha_idx, int node, cplx v) {
    values_[static_cast<std::size_t>(alpha_idx) * n_nodes() + node] = v;
  }
  const cplx* row(int alpha_idx) const {
    return values_.data() + static_cast<std::size_t>(alpha_idx) * n_nodes();
  }
  cplx* row(int alpha_idx) {
    return values_.data() + static_cast<std::size_t>(alpha_idx) * n_nodes();
  }
  const std::vector<cplx>& values() const { return values_; }

  bool all_finite() const;

  CoeffFunction& operator+=(const CoeffFunction& o);
  CoeffFunction& operator*=(cplx c);

  /// Dump as CSV rows "alpha_1,...,alpha_d,lambda,re,im".
  void dump_csv(std::ostream& os) const;

 private:
  std::shared_ptr<const GridLayout> layout_;
  std::vector<cplx> values_;
};

/// L^2(dmu) inner product sum_{alpha,nodes} f conj(g) mu_weight w_node.
/// Conjugate-symmetric, positive definite on the truncation.
/// Throws std::invalid_argument on grid mismatch.
cplx inner_product(const CoeffFunction& f, const CoeffFunction& g);

double norm_sq(const CoeffFunction& f);
double norm(const CoeffFunction& f);

/// Independent normally-distributed coefficients (test/trial helper).
CoeffFunction random_coeff_function(const GridSpec& spec, std::uint64_t seed);

/// Copy `f` into the (finer or equal) grid `target`, extending by zero.
/// Requires target.spacing divides f.spacing and node/alpha sets nest.
CoeffFunction embed_zero_extend(const CoeffFunction& f, const GridSpec& target);

}  // namespace sda

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "sda/grid.hpp"
#include "sda/shifts.hpp"

#include "json.hpp"

namespace sda {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Finite-dimensional Siegel-dissipative commuting tuple (A_1,...,A_d, A_{d+1})
/// on C^dim with strong-dissipativity margin epsilon >= 0.
///
/// Invariants (verified by check_dissipative / validate tests):
///  - all pairs commute to relative 1e-10;
///  - the defect matrix G = (A_{d+1} - A_{d+1}^*)/(2i) - (1/4) sum A_i^* A_i
///    is Hermitian with min eigenvalue >= epsilon - 1e-10.
///
/// The displayed cross term of <.,.>_Delta in the source material omits the
/// A_i factors that its own norm identity requires; G above follows the norm
/// line ||v||_Delta^2 = Im<A_{d+1}v,v> - (1/4) sum ||A_i v||^2.
struct OperatorTuple {
  int d = 1;
  int dim = 1;
  std::vector<Matrix> A;  // d bounded operators
  Matrix A_last;          // A_{d+1}
  double epsilon = 0.0;
  std::uint64_t seed = 0;  // provenance when generated

  /// Defect matrix G (Hermitian by construction).
  Matrix defect_matrix() const;

  nlohmann::json to_json() const;
  static OperatorTuple from_json(const nlohmann::json& j);
};

struct DissipativityReport {
  double min_eig = 0.0;
  double worst_commutator = 0.0;  // max ||[A_i,A_j]|| / (||A_i|| ||A_j||)
  bool strong = false;            // min_eig >= epsilon > 0
};

DissipativityReport check_dissipative(const OperatorTuple& t);

enum class CommutingMode { Polynomial, SimilarDiagonals };

/// Deterministic generator of strongly Siegel-dissipative tuples: commuting
/// A_i as polynomials in one random matrix (or a common similarity of random
/// diagonals), A_{d+1} shifted by i*s*Id with the minimal s reaching margin
/// epsilon. The A_i are scaled smallish so Theta's alpha series converges
/// geometrically at margin epsilon.
OperatorTuple random_tuple(int d, int dim, double epsilon, std::uint64_t seed,
                           CommutingMode mode = CommutingMode::Polynomial);

/// exp(-i tau A_{d+1}) for tau <= 0 (scaling-and-squaring Pade under the
/// hood). Contraction with rate: ||.|| <= e^{tau epsilon} for strong tuples.
Matrix semigroup(const OperatorTuple& t, double tau);

/// p(M_1,...,M_d) = sum c_gamma e^{-i tau_gamma A_{d+1}} A^gamma.
Matrix apply_polynomial(const OperatorTuple& t, const ShiftSymbol& sym);

/// Largest singular value (dense SVD).
double operator_norm(const Matrix& m);

/// H-valued grid function g(alpha, lambda) in C^dim per node.
class HValuedGridFunction {
 public:
  HValuedGridFunction(const GridSpec& spec, int dim);

  const GridSpec& grid() const { return layout_->spec(); }
  const GridLayout& layout() const { return *layout_; }
  int dim() const { return dim_; }
  int n_alpha() const { return layout_->n_alpha(); }
  int n_nodes() const { return layout_->n_nodes(); }

  Eigen::Map<Vector> at(int alpha_idx, int node) {
    return Eigen::Map<Vector>(values_.data() + offset(alpha_idx, node), dim_);
  }
  Eigen::Map<const Vector> at(int alpha_idx, int node) const {
    return Eigen::Map<const Vector>(values_.data() + offset(alpha_idx, node), dim_);
  }

 private:
  std::size_t offset(int alpha_idx, int node) const {
    return (static_cast<std::size_t>(alpha_idx) * layout_->n_nodes() + node) * dim_;
  }
  std::shared_ptr<const GridLayout> layout_;
  int dim_;
  std::vector<cplx> values_;
};

/// Plain grid quadrature of ||g||^2_{L^2(Delta)} = sum <G g, g> mu w.
double l2delta_norm_sq(const HValuedGridFunction& g, const Matrix& G);

/// (Theta v)(alpha, lambda) = |lambda|^{|alpha|-d} / (alpha! 2^{|alpha|-1/2})
///                              e^{-i lambda A_{d+1}} A^alpha v.
/// Requires epsilon > 0 and e^{epsilon lambda_min} < 1e-12 (cutoff depth).
HValuedGridFunction theta_embed(const OperatorTuple& t, const Vector& v, const GridSpec& grid);

struct ThetaNormInfo {
  double norm_sq = 0.0;
  int shells_used = 0;
  double tail_fraction = 0.0;  // last shell mass / total
  bool truncated = false;      // hit the alpha_max cap before the tail bound
};

/// ||Theta v||^2_{L^2(Delta)} evaluated without materializing Theta v: the
/// combined weight |lambda|^{|alpha|}/(2^{|alpha|-1} alpha!) is formed once
/// per node, alpha shells are extended adaptively until their contribution
/// falls below 1e-12 of the total (cap: grid.alpha_max), and the lambda -> 0
/// boundary term h ||v||^2_Delta of the integration by parts is included
/// (trapezoid endpoint with the analytic limit).
ThetaNormInfo theta_norm_info(const OperatorTuple& t, const Vector& v, const GridSpec& grid);

/// | ||Theta v||^2 - ||v||^2 | / ||v||^2 (absolute when v = 0).
double theta_isometry_residual(const OperatorTuple& t, const Vector& v, const GridSpec& grid);

/// Relative defect of Theta(e^{-i tau A_{d+1}} A^gamma v) =
/// [S*_{gamma,tau} (x) Id] Theta v over all grid nodes: max node difference
/// over max node magnitude. Pure algebra; exact up to rounding.
double intertwine_residual(const OperatorTuple& t, const MultiIndex& gamma, double tau,
                           const Vector& v, const GridSpec& grid);

}  // namespace sda

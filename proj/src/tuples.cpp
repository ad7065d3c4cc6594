#include "sda/tuples.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>
#include <unsupported/Eigen/MatrixFunctions>

#include "sda/rng.hpp"

namespace sda {

namespace {

Matrix random_matrix(Rng& rng, int dim) {
  Matrix m(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) m(i, j) = rng.cnormal();
  }
  return m;
}

double min_eig_hermitian(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  return es.eigenvalues()(0);
}

/// A^alpha = A_1^{alpha_1} ... A_d^{alpha_d}
Matrix tuple_power(const OperatorTuple& t, const MultiIndex& alpha) {
  Matrix p = Matrix::Identity(t.dim, t.dim);
  for (int i = 0; i < t.d; ++i) {
    for (int k = 0; k < alpha[i]; ++k) p = p * t.A[i];
  }
  return p;
}

nlohmann::json matrix_to_json(const Matrix& m) {
  std::vector<double> re, im;
  re.reserve(m.size());
  im.reserve(m.size());
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      re.push_back(m(i, j).real());
      im.push_back(m(i, j).imag());
    }
  }
  return nlohmann::json{{"rows", m.rows()}, {"cols", m.cols()}, {"re", re}, {"im", im}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const int rows = j.at("rows").get<int>();
  const int cols = j.at("cols").get<int>();
  const auto re = j.at("re").get<std::vector<double>>();
  const auto im = j.at("im").get<std::vector<double>>();
  if (static_cast<int>(re.size()) != rows * cols || re.size() != im.size()) {
    throw std::invalid_argument("matrix_from_json: size mismatch");
  }
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int jj = 0; jj < cols; ++jj) m(i, jj) = cplx(re[i * cols + jj], im[i * cols + jj]);
  }
  return m;
}

}  // namespace

Matrix OperatorTuple::defect_matrix() const {
  Matrix g = (A_last - A_last.adjoint()) / cplx(0.0, 2.0);
  for (const Matrix& a : A) g -= 0.25 * (a.adjoint() * a);
  return 0.5 * (g + Matrix(g.adjoint()));  // symmetrize rounding noise
}

nlohmann::json OperatorTuple::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const Matrix& a : A) arr.push_back(matrix_to_json(a));
  return nlohmann::json{{"d", d},       {"dim", dim},         {"A", arr},
                        {"A_last", matrix_to_json(A_last)},   {"epsilon", epsilon},
                        {"seed", seed}};
}

OperatorTuple OperatorTuple::from_json(const nlohmann::json& j) {
  OperatorTuple t;
  t.d = j.at("d").get<int>();
  t.dim = j.at("dim").get<int>();
  for (const auto& a : j.at("A")) t.A.push_back(matrix_from_json(a));
  t.A_last = matrix_from_json(j.at("A_last"));
  t.epsilon = j.at("epsilon").get<double>();
  if (j.contains("seed")) t.seed = j.at("seed").get<std::uint64_t>();
  if (static_cast<int>(t.A.size()) != t.d) throw std::invalid_argument("tuple: A count != d");
  return t;
}

DissipativityReport check_dissipative(const OperatorTuple& t) {
  DissipativityReport r;
  r.min_eig = min_eig_hermitian(t.defect_matrix());
  std::vector<const Matrix*> all;
  for (const Matrix& a : t.A) all.push_back(&a);
  all.push_back(&t.A_last);
  std::vector<double> norms;
  for (const Matrix* a : all) norms.push_back(operator_norm(*a));
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      const double comm = operator_norm((*all[i]) * (*all[j]) - (*all[j]) * (*all[i]));
      const double scale = std::max(norms[i] * norms[j], 1e-300);
      r.worst_commutator = std::max(r.worst_commutator, comm / scale);
    }
  }
  r.strong = t.epsilon > 0.0 && r.min_eig >= t.epsilon - 1e-10;
  return r;
}

OperatorTuple random_tuple(int d, int dim, double epsilon, std::uint64_t seed,
                           CommutingMode mode) {
  if (dim < 1) throw std::invalid_argument("random_tuple: dim must be >= 1");
  if (d < 1) throw std::invalid_argument("random_tuple: d must be >= 1");
  if (!(epsilon > 0.0)) throw std::invalid_argument("random_tuple: epsilon must be > 0");
  Rng rng(seed);
  OperatorTuple t;
  t.d = d;
  t.dim = dim;
  t.epsilon = epsilon;
  t.seed = seed;

  // Target scale of the bounded operators. Keeping sum ||A_i||^2 well below
  // 4*epsilon makes the Theta shell series geometric with a small ratio.
  const double a_target = 0.35 / std::sqrt(static_cast<double>(d));

  Matrix base, basis_inv;
  std::vector<Matrix> diag_pool;
  if (mode == CommutingMode::Polynomial) {
    base = random_matrix(rng, dim) / std::sqrt(static_cast<double>(dim));
  } else {
    // similarity of diagonals: regenerate until the basis is well conditioned
    for (int tries = 0; tries < 64; ++tries) {
      base = random_matrix(rng, dim);
      Eigen::JacobiSVD<Matrix> svd(base);
      const double cond = svd.singularValues()(0) / svd.singularValues()(dim - 1);
      if (cond < 1e3) break;
    }
    basis_inv = base.inverse();
  }

  auto make_commuting = [&]() -> Matrix {
    if (mode == CommutingMode::Polynomial) {
      const cplx c0 = rng.cnormal(), c1 = rng.cnormal(), c2 = rng.cnormal();
      return c0 * Matrix::Identity(dim, dim) + c1 * base + c2 * (base * base);
    }
    Matrix diag = Matrix::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) diag(i, i) = rng.cnormal();
    return base * diag * basis_inv;
  };

  for (int i = 0; i < d; ++i) {
    Matrix a = make_commuting();
    const double n = operator_norm(a);
    if (n > 0.0) a *= (a_target / n);
    t.A.push_back(std::move(a));
  }
  Matrix cand = make_commuting();
  const double cn = operator_norm(cand);
  if (cn > 0.0) cand *= (1.0 / cn);
  t.A_last = cand;
  const double m0 = min_eig_hermitian(t.defect_matrix());
  const double s = std::max(0.0, epsilon - m0);
  t.A_last += cplx(0.0, s) * Matrix::Identity(dim, dim);
  return t;
}

Matrix semigroup(const OperatorTuple& t, double tau) {
  if (tau > 0.0) throw std::domain_error("semigroup: tau must be <= 0");
  if (tau == 0.0) return Matrix::Identity(t.dim, t.dim);
  const Matrix m = cplx(0.0, -tau) * t.A_last;
  return m.exp();
}

Matrix apply_polynomial(const OperatorTuple& t, const ShiftSymbol& sym) {
  sym.validate();
  Matrix acc = Matrix::Zero(t.dim, t.dim);
  for (const ShiftSymbol::Term& term : sym.terms) {
    if (term.gamma.dim() != t.d) throw std::invalid_argument("apply_polynomial: dim mismatch");
    acc += term.c * (semigroup(t, term.tau) * tuple_power(t, term.gamma));
  }
  return acc;
}

double operator_norm(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

HValuedGridFunction::HValuedGridFunction(const GridSpec& spec, int dim)
    : layout_(GridLayout::make(spec)),
      dim_(dim),
      values_(static_cast<std::size_t>(layout_->n_alpha()) * layout_->n_nodes() * dim,
              cplx(0.0)) {}

double l2delta_norm_sq(const HValuedGridFunction& g, const Matrix& G) {
  const GridSpec& spec = g.grid();
  double acc = 0.0;
  for (int ai = 0; ai < g.n_alpha(); ++ai) {
    const MultiIndex& a = g.layout().alpha(ai);
    for (int j = 0; j < g.n_nodes(); ++j) {
      const auto x = g.at(ai, j);
      const double q = (x.adjoint() * (G * x))(0).real();
      acc += q * mu_weight(a, spec.node(j), spec.d) * spec.node_weight(j);
    }
  }
  return acc;
}

namespace {

void require_theta_preconditions(const OperatorTuple& t, const GridSpec& grid) {
  grid.validate();
  if (grid.d != t.d) throw std::invalid_argument("theta: grid dimension != tuple dimension");
  if (!(t.epsilon > 0.0)) {
    throw std::invalid_argument("theta: epsilon must be > 0 (L^2(Delta) degenerate otherwise)");
  }
  if (std::exp(t.epsilon * grid.lambda_min) >= 1e-12) {
    throw std::invalid_argument(
        "theta: grid lambda_min too shallow, need e^{epsilon*lambda_min} < 1e-12");
  }
}

/// |lambda|^{|alpha|-d} / (alpha! 2^{|alpha|-1/2})
double theta_coefficient(const MultiIndex& alpha, double lambda, int d) {
  const int k = alpha.order();
  const double al = -lambda;
  return std::pow(al, k - d) / (factorial(alpha) * std::pow(2.0, k - 0.5));
}

/// Semigroup samples w_j = e^{-i lambda_j A_{d+1}} v at every node, by
/// repeated application of the one-step matrix exp(i h A_{d+1}).
std::vector<Vector> propagate_nodes(const OperatorTuple& t, const Vector& v,
                                    const GridSpec& grid) {
  const int nn = grid.node_count();
  const Matrix step = semigroup(t, -grid.spacing);
  std::vector<Vector> w(nn);
  Vector cur = v;
  for (int j = 0; j < nn; ++j) {
    cur = step * cur;
    w[j] = cur;
  }
  return w;
}

}  // namespace

HValuedGridFunction theta_embed(const OperatorTuple& t, const Vector& v, const GridSpec& grid) {
  require_theta_preconditions(t, grid);
  if (v.size() != t.dim) throw std::invalid_argument("theta: vector dimension mismatch");
  HValuedGridFunction out(grid, t.dim);
  const std::vector<Vector> w = propagate_nodes(t, v, grid);
  for (int ai = 0; ai < out.n_alpha(); ++ai) {
    const MultiIndex& a = out.layout().alpha(ai);
    const Matrix p = tuple_power(t, a);
    for (int j = 0; j < out.n_nodes(); ++j) {
      out.at(ai, j) = theta_coefficient(a, grid.node(j), grid.d) * (p * w[j]);
    }
  }
  return out;
}

ThetaNormInfo theta_norm_info(const OperatorTuple& t, const Vector& v, const GridSpec& grid) {
  require_theta_preconditions(t, grid);
  if (v.size() != t.dim) throw std::invalid_argument("theta: vector dimension mismatch");
  const Matrix G = t.defect_matrix();
  const int nn = grid.node_count();
  const std::vector<Vector> w = propagate_nodes(t, v, grid);

  // Shell-wise Hermitian forms M_k = sum_{|alpha|=k} (A^alpha)^* G A^alpha
  // / (2^{k-1} alpha!); per node the integrand is |lambda|^k w^* M_k w.
  const std::vector<MultiIndex> alphas = enumerate_multi_indices(t.d, grid.alpha_max);
  std::vector<double> lam_pow(nn, 1.0);

  ThetaNormInfo info;
  // lambda -> 0 boundary term of the integration by parts (alpha = 0 shell).
  const double boundary = grid.spacing * (v.adjoint() * (G * v))(0).real();
  double total = boundary;
  std::size_t cursor = 0;
  int consecutive_small = 0;
  for (int k = 0; k <= grid.alpha_max; ++k) {
    Matrix mk = Matrix::Zero(t.dim, t.dim);
    while (cursor < alphas.size() && alphas[cursor].order() == k) {
      const MultiIndex& a = alphas[cursor];
      const Matrix p = tuple_power(t, a);
      mk += (p.adjoint() * (G * p)) / (std::pow(2.0, k - 1) * factorial(a));
      ++cursor;
    }
    double shell = 0.0;
    for (int j = 0; j < nn; ++j) {
      shell += lam_pow[j] * (w[j].adjoint() * (mk * w[j]))(0).real() * grid.node_weight(j);
      lam_pow[j] *= -grid.node(j);
    }
    total += shell;
    info.shells_used = k + 1;
    info.tail_fraction = total > 0.0 ? shell / total : 0.0;
    if (k >= 1 && std::abs(shell) <= 1e-12 * std::abs(total)) {
      if (++consecutive_small >= 2) break;
    } else {
      consecutive_small = 0;
    }
    if (k == grid.alpha_max && consecutive_small < 2) info.truncated = true;
  }
  info.norm_sq = total;
  return info;
}

double theta_isometry_residual(const OperatorTuple& t, const Vector& v, const GridSpec& grid) {
  const ThetaNormInfo info = theta_norm_info(t, v, grid);
  const double vv = v.squaredNorm();
  if (vv == 0.0) return std::abs(info.norm_sq);
  return std::abs(info.norm_sq - vv) / vv;
}

double intertwine_residual(const OperatorTuple& t, const MultiIndex& gamma, double tau,
                           const Vector& v, const GridSpec& grid) {
  grid.validate();
  if (grid.d != t.d || gamma.dim() != t.d) {
    throw std::invalid_argument("intertwine: dimension mismatch");
  }
  const int m = shift_steps(tau, grid);
  const int nn = grid.node_count();
  const std::vector<Vector> w = propagate_nodes(t, v, grid);
  const std::vector<MultiIndex> alphas = enumerate_multi_indices(t.d, grid.alpha_max);
  const int gk = gamma.order();
  const double two_pow = std::pow(2.0, gk);

  double max_diff = 0.0;
  double max_mag = 0.0;
  for (const MultiIndex& a : alphas) {
    const Matrix p = tuple_power(t, a.plus(gamma));
    const int ak = a.order();
    const double rf = factorial_ratio(a, gamma) * two_pow;
    for (int j = 0; j + m < nn; ++j) {
      const double lam = grid.node(j);
      const double lam_t = grid.node(j + m);  // lambda + tau on the grid
      // u = e^{-i(lambda+tau) A_{d+1}} A^{alpha+gamma} v, shared by both routes
      const Vector u = p * w[j + m];
      const Vector lhs = theta_coefficient(a, lam, grid.d) * u;
      const double pref =
          std::pow(-lam_t, grid.d - ak - gk) * std::pow(-lam, ak - grid.d) * rf;
      const Vector rhs = (pref * theta_coefficient(a.plus(gamma), lam_t, grid.d)) * u;
      max_diff = std::max(max_diff, (lhs - rhs).norm());
      max_mag = std::max({max_mag, lhs.norm(), rhs.norm()});
    }
  }
  if (max_mag == 0.0) return max_diff;
  return max_diff / max_mag;
}

}  // namespace sda

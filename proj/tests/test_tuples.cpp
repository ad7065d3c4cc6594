#include <cmath>
#include <complex>

#include "doctest.h"
#include "sda/rng.hpp"
#include "sda/tuples.hpp"

using namespace sda;

namespace {

OperatorTuple scalar_anchor() {
  OperatorTuple t;
  t.d = 1;
  t.dim = 1;
  t.epsilon = 1.0;
  t.A.push_back(Matrix::Zero(1, 1));
  t.A_last = Matrix::Zero(1, 1);
  t.A_last(0, 0) = cplx(0.0, 1.0);
  return t;
}

Vector random_vector(Rng& rng, int dim) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.cnormal();
  return v;
}

GridSpec theta_grid(double h = 5e-3, double lambda_min = -40.0, int alpha_max = 16, int d = 1) {
  GridSpec g;
  g.d = d;
  g.alpha_max = alpha_max;
  g.lambda_min = lambda_min;
  g.spacing = h;
  return g;
}

}  // namespace

TEST_CASE("check_dissipative on scalar references") {
  // (A=0, A_last=i): G = 1
  const OperatorTuple t = scalar_anchor();
  const DissipativityReport r = check_dissipative(t);
  CHECK(r.min_eig == doctest::Approx(1.0));
  CHECK(r.worst_commutator < 1e-14);
  CHECK(r.strong);

  // Hermitian A_last with nonzero A_i is never dissipative
  OperatorTuple h;
  h.d = 1;
  h.dim = 2;
  h.A.push_back(Matrix::Identity(2, 2) * 0.5);
  h.A_last = Matrix::Identity(2, 2) * 2.0;  // Hermitian: Im part vanishes
  h.epsilon = 0.0;
  CHECK(check_dissipative(h).min_eig < 0.0);

  // shifting A_last by i s Id raises min_eig by exactly s
  OperatorTuple shifted = h;
  shifted.A_last += cplx(0.0, 3.0) * Matrix::Identity(2, 2);
  CHECK(check_dissipative(shifted).min_eig ==
        doctest::Approx(check_dissipative(h).min_eig + 3.0).epsilon(1e-12));
}

TEST_CASE("random_tuple generator contract") {
  for (const auto mode : {CommutingMode::Polynomial, CommutingMode::SimilarDiagonals}) {
    for (int trial = 0; trial < 12; ++trial) {
      const int d = 1 + trial % 2;
      const int dim = 2 + trial % 5;
      const OperatorTuple t = random_tuple(d, dim, 0.25, 1000 + trial, mode);
      const DissipativityReport r = check_dissipative(t);
      CHECK(r.strong);
      CHECK(r.min_eig >= 0.25 - 1e-10);
      CHECK(r.worst_commutator < 1e-10);
    }
  }

  // dim = 1 reduces to scalars with Im(a_last) >= |a|^2/4 + eps
  const OperatorTuple s = random_tuple(1, 1, 0.5, 77);
  const double lhs = s.A_last(0, 0).imag();
  const double rhs = 0.25 * std::norm(s.A[0](0, 0)) + 0.5;
  CHECK(lhs >= rhs - 1e-12);

  // same seed is bit-identical
  const OperatorTuple a = random_tuple(2, 4, 0.3, 42);
  const OperatorTuple b = random_tuple(2, 4, 0.3, 42);
  CHECK(a.A_last == b.A_last);
  for (int i = 0; i < 2; ++i) CHECK(a.A[i] == b.A[i]);
}

TEST_CASE("semigroup: identity, scalar value, commutation, contraction rate") {
  const OperatorTuple t = random_tuple(2, 5, 0.4, 9);
  CHECK(semigroup(t, 0.0) == Matrix::Identity(5, 5));
  CHECK_THROWS_AS(semigroup(t, 0.1), std::domain_error);

  const OperatorTuple s = scalar_anchor();
  for (double tau : {-0.5, -2.0}) {
    CHECK(std::abs(semigroup(s, tau)(0, 0) - std::exp(tau)) < 1e-14);
  }

  for (double tau : {-0.25, -1.0, -3.0}) {
    const Matrix e = semigroup(t, tau);
    for (int i = 0; i < t.d; ++i) {
      const double comm = operator_norm(e * t.A[i] - t.A[i] * e);
      CHECK(comm <= 1e-10 * operator_norm(e) * operator_norm(t.A[i]));
    }
    CHECK(operator_norm(e) <= std::exp(tau * t.epsilon) + 1e-10);
  }
}

TEST_CASE("apply_polynomial: constants, single terms, order independence") {
  const OperatorTuple t = random_tuple(2, 4, 0.3, 31);
  const ShiftSymbol c{{{cplx(2.5, -1.0), MultiIndex::zero(2), 0.0}}};
  CHECK(operator_norm(apply_polynomial(t, c) - cplx(2.5, -1.0) * Matrix::Identity(4, 4)) <
        1e-13);

  // single term c=1, gamma=e_j, tau_j: M_j = e^{-i tau_j A_{d+1}} A_j
  const double tau = -0.7;
  const ShiftSymbol mj{{{cplx(1.0), MultiIndex::unit(2, 1), tau}}};
  CHECK(operator_norm(apply_polynomial(t, mj) - semigroup(t, tau) * t.A[1]) < 1e-12);

  // factors commute: reversed term order gives the same matrix
  ShiftSymbol sym{{{cplx(0.3, 0.4), MultiIndex({1, 0}), -0.2},
                   {cplx(-0.8, 0.1), MultiIndex({1, 2}), -0.9},
                   {cplx(0.0, 1.0), MultiIndex({0, 0}), 0.0}}};
  ShiftSymbol rev = sym;
  std::reverse(rev.terms.begin(), rev.terms.end());
  CHECK(operator_norm(apply_polynomial(t, sym) - apply_polynomial(t, rev)) < 1e-12);
}

TEST_CASE("operator_norm basics") {
  CHECK(operator_norm(Matrix::Identity(4, 4)) == doctest::Approx(1.0));
  Matrix diag = Matrix::Zero(2, 2);
  diag(0, 0) = cplx(2.0, 0.0);
  diag(1, 1) = cplx(0.0, -3.0);
  CHECK(operator_norm(diag) == doctest::Approx(3.0));

  // unitary invariance
  Rng rng(12);
  Matrix m(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = rng.cnormal();
  Matrix q(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) q(i, j) = rng.cnormal();
  const Eigen::HouseholderQR<Matrix> qr(q);
  const Matrix u = qr.householderQ();
  CHECK(operator_norm(u * m * u.adjoint()) == doctest::Approx(operator_norm(m)).epsilon(1e-12));
}

TEST_CASE("theta preconditions") {
  const OperatorTuple t = scalar_anchor();
  Vector v(1);
  v(0) = 1.0;
  OperatorTuple weak = t;
  weak.epsilon = 0.0;
  CHECK_THROWS_AS(theta_embed(weak, v, theta_grid()), std::invalid_argument);
  // shallow cutoff: e^{eps lambda_min} >= 1e-12
  CHECK_THROWS_AS(theta_embed(t, v, theta_grid(0.05, -10.0, 8)), std::invalid_argument);
}

TEST_CASE("theta_embed on the scalar anchor and zero vector") {
  const OperatorTuple t = scalar_anchor();
  Vector v(1);
  v(0) = cplx(0.6, -0.8);
  const GridSpec g = theta_grid(1e-2, -40.0, 6);
  const HValuedGridFunction th = theta_embed(t, v, g);

  // alpha = 0 row: sqrt(2) |lambda|^{-1} e^{lambda} v
  const int a0 = 0;
  for (int j = 0; j < 20; ++j) {
    const double lam = g.node(j);
    const cplx expect = std::sqrt(2.0) * std::exp(lam) / (-lam) * v(0);
    CHECK(std::abs(th.at(a0, j)(0) - expect) < 1e-12 * std::abs(expect));
  }
  // A = 0 kills every alpha > 0 row
  for (int ai = 1; ai < th.n_alpha(); ++ai) {
    for (int j = 0; j < th.n_nodes(); ++j) CHECK(th.at(ai, j).norm() == 0.0);
  }

  // norm through the plain grid quadrature matches the streaming path
  const double plain = l2delta_norm_sq(th, t.defect_matrix());
  const ThetaNormInfo info = theta_norm_info(t, v, g);
  const double boundary = g.spacing * (v.adjoint() * (t.defect_matrix() * v))(0).real();
  CHECK(plain == doctest::Approx(info.norm_sq - boundary).epsilon(1e-10));

  Vector zero = Vector::Zero(1);
  const HValuedGridFunction thz = theta_embed(t, zero, g);
  CHECK(l2delta_norm_sq(thz, t.defect_matrix()) == 0.0);
}

TEST_CASE("theta isometry: anchor quadrature error tracks h^2/3") {
  const OperatorTuple t = scalar_anchor();
  Vector v(1);
  v(0) = 1.0;
  const double r1 = theta_isometry_residual(t, v, theta_grid(5e-3, -40.0, 4));
  CHECK(r1 < 2e-5);
  CHECK(r1 == doctest::Approx(5e-3 * 5e-3 / 3.0).epsilon(0.05));
  const double r2 = theta_isometry_residual(t, v, theta_grid(1e-3, -40.0, 4));
  CHECK(r2 <= 1e-6);
}

TEST_CASE("theta isometry on nilpotent and random tuples") {
  // nilpotent A truncates the alpha series exactly: support |alpha| < 3
  OperatorTuple nil;
  nil.d = 1;
  nil.dim = 3;
  nil.A.push_back(Matrix::Zero(3, 3));
  nil.A[0](0, 1) = 1.0;
  nil.A[0](1, 2) = 1.0;
  nil.A_last = cplx(0.0, 1.0) * Matrix::Identity(3, 3);
  nil.epsilon = check_dissipative(nil).min_eig;
  REQUIRE(nil.epsilon > 0.5);
  Rng rng(8);
  const Vector v = random_vector(rng, 3);
  const GridSpec g = theta_grid(1e-2, -60.0, 8);
  const HValuedGridFunction th = theta_embed(nil, v, g);
  for (int ai = 0; ai < th.n_alpha(); ++ai) {
    if (th.layout().alpha(ai).order() < 3) continue;
    for (int j = 0; j < th.n_nodes(); ++j) CHECK(th.at(ai, j).norm() == 0.0);
  }
  CHECK(theta_isometry_residual(nil, v, g) < 5e-4);

  // random strong tuples at the documented fine grid
  for (int trial = 0; trial < 5; ++trial) {
    const int d = 1 + trial % 2;
    const OperatorTuple t = random_tuple(d, 2 + trial, 0.5, 500 + trial);
    const Vector w = random_vector(rng, t.dim);
    const GridSpec fine = theta_grid(1e-3, -60.0, 20, d);
    CHECK(theta_isometry_residual(t, w, fine) < 1e-4);
  }
}

TEST_CASE("theta isometry residual is unitarily invariant") {
  // all ingredients transform covariantly; compare on a coarse grid where
  // the quadrature defect is well above rounding
  const OperatorTuple t = random_tuple(1, 4, 0.6, 314);
  Rng rng(15);
  const Vector v = random_vector(rng, 4);
  Matrix q(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) q(i, j) = rng.cnormal();
  const Matrix u = Eigen::HouseholderQR<Matrix>(q).householderQ();
  OperatorTuple tu = t;
  for (Matrix& a : tu.A) a = u * a * u.adjoint();
  tu.A_last = u * t.A_last * u.adjoint();
  const GridSpec g = theta_grid(2e-2, -48.0, 14);
  const double r1 = theta_isometry_residual(t, v, g);
  const double r2 = theta_isometry_residual(tu, Vector(u * v), g);
  CHECK(std::abs(r1 - r2) < 1e-9);
}

TEST_CASE("intertwining residual is pure rounding") {
  Rng rng(2718);
  GridSpec g;
  g.alpha_max = 5;
  g.lambda_min = -8.0;
  g.spacing = 0.05;
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 1 + trial % 2;
    g.d = d;
    const OperatorTuple t = random_tuple(d, 2 + trial % 4, 0.4, 8000 + trial);
    const Vector v = random_vector(rng, t.dim);
    const auto gammas = enumerate_multi_indices(d, 2);
    const MultiIndex gamma = gammas[rng.uniform_int(0, static_cast<int>(gammas.size()) - 1)];
    const double tau = -0.05 * static_cast<double>(rng.uniform_int(1, 8));
    CHECK(intertwine_residual(t, gamma, tau, v, g) < 1e-10);
  }

  // gamma = 0 route
  g.d = 1;
  const OperatorTuple t = random_tuple(1, 3, 0.5, 99);
  const Vector v = random_vector(rng, 3);
  CHECK(intertwine_residual(t, MultiIndex({0}), -0.25, v, g) < 1e-12);

  // scalar tuple: every vector is a joint eigenvector, cancellation is exact
  const OperatorTuple s = random_tuple(1, 1, 0.5, 123);
  Vector one(1);
  one(0) = cplx(1.0, 0.0);
  CHECK(intertwine_residual(s, MultiIndex({1}), -0.1, one, g) < 1e-14);
}

TEST_CASE("epsilon to zero limit of the polynomial calculus") {
  const OperatorTuple t = random_tuple(1, 4, 0.3, 555);
  const double tau = -0.5;
  const ShiftSymbol sym{{{cplx(1.0), MultiIndex({2}), tau}}};
  const Matrix base = apply_polynomial(t, sym);
  const double base_norm = operator_norm(base);
  double prev = 1e300;
  for (const double eps : {1e-1, 1e-2, 1e-3}) {
    OperatorTuple te = t;
    te.A_last = t.A_last + cplx(0.0, eps) * Matrix::Identity(4, 4);
    const double diff = operator_norm(apply_polynomial(te, sym) - base);
    CHECK(diff <= (1.0 - std::exp(tau * eps)) * base_norm * (1.0 + 1e-8));
    CHECK(diff < prev);
    prev = diff;
  }
}

TEST_CASE("OperatorTuple json round trip") {
  const OperatorTuple t = random_tuple(2, 3, 0.4, 777);
  const OperatorTuple back = OperatorTuple::from_json(t.to_json());
  CHECK(back.d == t.d);
  CHECK(back.dim == t.dim);
  CHECK(back.epsilon == t.epsilon);
  CHECK(back.seed == t.seed);
  CHECK(back.A_last == t.A_last);
  for (int i = 0; i < t.d; ++i) CHECK(back.A[i] == t.A[i]);
}

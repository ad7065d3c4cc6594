#include "sda/grid.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "sda/rng.hpp"

namespace sda {

std::string to_string(QuadratureRule rule) {
  switch (rule) {
    case QuadratureRule::RiemannMidpoint: return "riemann-midpoint";
    case QuadratureRule::Trapezoid: return "trapezoid";
  }
  return "riemann-midpoint";
}

QuadratureRule quadrature_rule_from_string(const std::string& s) {
  if (s == "riemann-midpoint") return QuadratureRule::RiemannMidpoint;
  if (s == "trapezoid") return QuadratureRule::Trapezoid;
  throw std::invalid_argument("unknown quadrature rule: " + s);
}

void GridSpec::validate() const {
  if (d < 1) throw std::invalid_argument("grid: d must be >= 1");
  if (alpha_max < 0) throw std::invalid_argument("grid: alpha_max must be >= 0");
  if (!(spacing > 0.0)) throw std::invalid_argument("grid: spacing must be > 0");
  if (!(lambda_min < 0.0)) throw std::invalid_argument("grid: lambda_min must be < 0");
  const double kd = -lambda_min / spacing;
  const long long k = std::llround(kd);
  if (k < 2) throw std::invalid_argument("grid: need at least 2 lambda nodes");
  if (std::abs(lambda_min + static_cast<double>(k) * spacing) >
      1e-9 * std::max(spacing, -lambda_min)) {
    throw std::invalid_argument("grid: lambda_min must be an integer multiple of spacing");
  }
}

int GridSpec::node_count() const {
  validate();
  return static_cast<int>(std::llround(-lambda_min / spacing));
}

double GridSpec::node_weight(int j) const {
  switch (rule) {
    case QuadratureRule::RiemannMidpoint:
      return spacing;
    case QuadratureRule::Trapezoid: {
      const int k = static_cast<int>(std::llround(-lambda_min / spacing));
      return (j == 0 || j == k - 1) ? 0.5 * spacing : spacing;
    }
  }
  return spacing;
}

bool GridSpec::operator==(const GridSpec& o) const {
  return d == o.d && alpha_max == o.alpha_max && lambda_min == o.lambda_min &&
         spacing == o.spacing && rule == o.rule;
}

nlohmann::json GridSpec::to_json() const {
  return nlohmann::json{{"d", d},
                        {"alpha_max", alpha_max},
                        {"lambda_min", lambda_min},
                        {"spacing", spacing},
                        {"rule", to_string(rule)}};
}

GridSpec GridSpec::from_json(const nlohmann::json& j) {
  GridSpec g;
  g.d = j.at("d").get<int>();
  g.alpha_max = j.at("alpha_max").get<int>();
  g.lambda_min = j.at("lambda_min").get<double>();
  g.spacing = j.at("spacing").get<double>();
  if (j.contains("rule")) g.rule = quadrature_rule_from_string(j.at("rule").get<std::string>());
  g.validate();
  return g;
}

GridLayout::GridLayout(const GridSpec& spec) : spec_(spec) {
  spec_.validate();
  n_nodes_ = spec_.node_count();
  alphas_ = enumerate_multi_indices(spec_.d, spec_.alpha_max);
  shell_begin_.assign(spec_.alpha_max + 2, 0);
  for (std::size_t i = 0; i < alphas_.size(); ++i) {
    // first index of each shell; enumeration is grouped by |alpha|
    const int k = alphas_[i].order();
    if (shell_begin_[k] == 0 && k > 0) shell_begin_[k] = static_cast<int>(i);
  }
  shell_begin_[spec_.alpha_max + 1] = static_cast<int>(alphas_.size());
}

int GridLayout::index_of(const MultiIndex& a) const {
  if (a.dim() != spec_.d) throw std::invalid_argument("multi-index dimension mismatch");
  const int k = a.order();
  if (k > spec_.alpha_max) return -1;
  const int begin = shell_begin_[k];
  const int end = shell_begin_[k + 1];
  for (int i = begin; i < end; ++i) {
    if (alphas_[i] == a) return i;
  }
  return -1;
}

std::shared_ptr<const GridLayout> GridLayout::make(const GridSpec& spec) {
  return std::make_shared<const GridLayout>(spec);
}

double mu_weight(const MultiIndex& alpha, double lambda, int d) {
  if (!(lambda < 0.0)) throw std::domain_error("mu_weight: lambda must be < 0");
  const double al = -lambda;
  const int k = alpha.order();
  double w;
  if (k <= 20) {
    w = factorial(alpha) * std::pow(2.0 / al, k) * std::pow(al, 2 * d);
  } else {
    w = std::exp(log_factorial(alpha) + static_cast<double>(k) * std::log(2.0 / al) +
                 2.0 * static_cast<double>(d) * std::log(al));
  }
  if (!std::isfinite(w)) throw std::range_error("mu_weight: overflow");
  return w;
}

double fock_norm_sq(const MultiIndex& alpha, double lambda) {
  if (lambda == 0.0) throw std::domain_error("fock_norm_sq: lambda must be nonzero");
  const double al = std::abs(lambda);
  const int k = alpha.order();
  double w;
  if (k <= 20) {
    w = factorial(alpha) * std::pow(2.0 / al, k);
  } else {
    w = std::exp(log_factorial(alpha) + static_cast<double>(k) * std::log(2.0 / al));
  }
  if (!std::isfinite(w)) throw std::range_error("fock_norm_sq: overflow");
  return w;
}

CoeffFunction::CoeffFunction(const GridSpec& spec)
    : layout_(GridLayout::make(spec)),
      values_(static_cast<std::size_t>(layout_->n_alpha()) * layout_->n_nodes(), cplx(0.0)) {}

CoeffFunction::CoeffFunction(std::shared_ptr<const GridLayout> layout, std::vector<cplx> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
  if (values_.size() != static_cast<std::size_t>(layout_->n_alpha()) * layout_->n_nodes()) {
    throw std::invalid_argument("CoeffFunction: value count does not match layout");
  }
}

bool CoeffFunction::all_finite() const {
  for (const cplx& v : values_) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

CoeffFunction& CoeffFunction::operator+=(const CoeffFunction& o) {
  if (grid() != o.grid()) throw std::invalid_argument("CoeffFunction: grid mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

CoeffFunction& CoeffFunction::operator*=(cplx c) {
  for (cplx& v : values_) v *= c;
  return *this;
}

void CoeffFunction::dump_csv(std::ostream& os) const {
  const GridSpec& g = grid();
  for (int ai = 0; ai < n_alpha(); ++ai) {
    const MultiIndex& a = layout_->alpha(ai);
    for (int j = 0; j < n_nodes(); ++j) {
      for (int i = 0; i < g.d; ++i) os << a[i] << ',';
      const cplx v = at(ai, j);
      os << g.node(j) << ',' << v.real() << ',' << v.imag() << '\n';
    }
  }
}

cplx inner_product(const CoeffFunction& f, const CoeffFunction& g) {
  if (f.grid() != g.grid()) throw std::invalid_argument("inner_product: grid mismatch");
  const GridSpec& spec = f.grid();
  const int nn = f.n_nodes();
  cplx acc(0.0);
  for (int ai = 0; ai < f.n_alpha(); ++ai) {
    const MultiIndex& a = f.layout().alpha(ai);
    const cplx* fr = f.row(ai);
    const cplx* gr = g.row(ai);
    cplx row_acc(0.0);
    for (int j = 0; j < nn; ++j) {
      const double w = mu_weight(a, spec.node(j), spec.d) * spec.node_weight(j);
      row_acc += fr[j] * std::conj(gr[j]) * w;
    }
    acc += row_acc;
  }
  return acc;
}

double norm_sq(const CoeffFunction& f) {
  const double v = inner_product(f, f).real();
  return v < 0.0 ? 0.0 : v;
}

double norm(const CoeffFunction& f) { return std::sqrt(norm_sq(f)); }

CoeffFunction random_coeff_function(const GridSpec& spec, std::uint64_t seed) {
  CoeffFunction f(spec);
  Rng rng(seed);
  for (int ai = 0; ai < f.n_alpha(); ++ai) {
    cplx* r = f.row(ai);
    for (int j = 0; j < f.n_nodes(); ++j) r[j] = rng.cnormal();
  }
  return f;
}

CoeffFunction embed_zero_extend(const CoeffFunction& f, const GridSpec& target) {
  const GridSpec& src = f.grid();
  if (target.d != src.d) throw std::invalid_argument("embed: dimension mismatch");
  if (target.alpha_max < src.alpha_max || target.lambda_min > src.lambda_min) {
    throw std::invalid_argument("embed: target grid must contain the source grid");
  }
  const double ratio = src.spacing / target.spacing;
  const long long r = std::llround(ratio);
  if (r < 1 || std::abs(ratio - static_cast<double>(r)) > 1e-9) {
    throw std::invalid_argument("embed: target spacing must divide source spacing");
  }
  CoeffFunction out(target);
  for (int ai = 0; ai < f.n_alpha(); ++ai) {
    const int ti = out.layout().index_of(f.layout().alpha(ai));
    for (int j = 0; j < f.n_nodes(); ++j) {
      // source node -(j+1)*h maps to target node index (j+1)*r - 1
      const int tj = static_cast<int>((static_cast<long long>(j) + 1) * r - 1);
      out.set(ti, tj, f.at(ai, j));
    }
  }
  return out;
}

}  // namespace sda

#include "sda/multi_index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sda {

MultiIndex::MultiIndex(std::vector<int> entries) : e_(std::move(entries)) {
  for (int v : e_) {
    if (v < 0) throw std::invalid_argument("multi-index entries must be nonnegative");
  }
}

MultiIndex MultiIndex::unit(int d, int j) {
  std::vector<int> e(d, 0);
  e.at(j) = 1;
  return MultiIndex(std::move(e));
}

int MultiIndex::order() const { return std::accumulate(e_.begin(), e_.end(), 0); }

bool MultiIndex::dominates(const MultiIndex& gamma) const {
  if (dim() != gamma.dim()) return false;
  for (int i = 0; i < dim(); ++i) {
    if (e_[i] < gamma.e_[i]) return false;
  }
  return true;
}

MultiIndex MultiIndex::plus(const MultiIndex& o) const {
  if (dim() != o.dim()) throw std::invalid_argument("multi-index dimension mismatch");
  std::vector<int> r(e_);
  for (int i = 0; i < dim(); ++i) r[i] += o.e_[i];
  return MultiIndex(std::move(r));
}

MultiIndex MultiIndex::minus(const MultiIndex& o) const {
  if (!dominates(o)) throw std::invalid_argument("multi-index subtraction requires domination");
  std::vector<int> r(e_);
  for (int i = 0; i < dim(); ++i) r[i] -= o.e_[i];
  return MultiIndex(std::move(r));
}

double factorial(const MultiIndex& alpha) {
  if (alpha.order() <= 20) {
    std::uint64_t f = 1;
    for (int i = 0; i < alpha.dim(); ++i) {
      for (int k = 2; k <= alpha[i]; ++k) f *= static_cast<std::uint64_t>(k);
    }
    return static_cast<double>(f);
  }
  return std::exp(log_factorial(alpha));
}

double log_factorial(const MultiIndex& alpha) {
  double s = 0.0;
  for (int i = 0; i < alpha.dim(); ++i) s += std::lgamma(static_cast<double>(alpha[i]) + 1.0);
  return s;
}

double factorial_ratio(const MultiIndex& alpha, const MultiIndex& gamma) {
  if (alpha.dim() != gamma.dim()) throw std::invalid_argument("multi-index dimension mismatch");
  double r = 1.0;
  for (int i = 0; i < alpha.dim(); ++i) {
    for (int s = 1; s <= gamma[i]; ++s) r *= static_cast<double>(alpha[i] + s);
  }
  return r;
}

namespace {

void enumerate_rec(int d, int pos, int remaining, std::vector<int>& cur,
                   std::vector<MultiIndex>& out) {
  if (pos == d - 1) {
    cur[pos] = remaining;
    out.emplace_back(cur);
    return;
  }
  for (int v = remaining; v >= 0; --v) {
    cur[pos] = v;
    enumerate_rec(d, pos + 1, remaining - v, cur, out);
  }
}

}  // namespace

std::vector<MultiIndex> enumerate_multi_indices(int d, int max_order) {
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  std::vector<MultiIndex> out;
  std::vector<int> cur(d, 0);
  for (int k = 0; k <= max_order; ++k) enumerate_rec(d, 0, k, cur, out);
  return out;
}

}  // namespace sda

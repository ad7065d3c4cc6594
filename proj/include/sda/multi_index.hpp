#pragma once

#include <cstdint>
#include <vector>

namespace sda {

/// Multi-index alpha in N_0^d.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> entries);
  static MultiIndex zero(int d) { return MultiIndex(std::vector<int>(d, 0)); }
  static MultiIndex unit(int d, int j);

  int dim() const { return static_cast<int>(e_.size()); }
  int order() const;  // |alpha|
  int operator[](int i) const { return e_[i]; }
  const std::vector<int>& entries() const { return e_; }

  bool operator==(const MultiIndex& o) const { return e_ == o.e_; }
  bool operator!=(const MultiIndex& o) const { return e_ != o.e_; }

  /// Componentwise alpha >= gamma.
  bool dominates(const MultiIndex& gamma) const;

  MultiIndex plus(const MultiIndex& o) const;
  MultiIndex minus(const MultiIndex& o) const;  // requires dominates(o)

 private:
  std::vector<int> e_;
};

/// alpha! = prod alpha_i!. Exact in integer arithmetic for |alpha| <= 20,
/// via log-gamma above that.
double factorial(const MultiIndex& alpha);

/// log(alpha!)
double log_factorial(const MultiIndex& alpha);

/// (alpha+gamma)!/alpha! = prod_i (alpha_i+1)...(alpha_i+gamma_i), exact.
double factorial_ratio(const MultiIndex& alpha, const MultiIndex& gamma);

/// All multi-indices in N_0^d with |alpha| <= max_order, graded
/// lexicographic (by |alpha|, then lexicographic).
std::vector<MultiIndex> enumerate_multi_indices(int d, int max_order);

}  // namespace sda

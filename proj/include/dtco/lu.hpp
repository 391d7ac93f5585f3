#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dtco {

/// Dense row-major square matrix sized for MNA systems (tens of unknowns).
class DenseMatrix {
 public:
  DenseMatrix() = default;
  explicit DenseMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double& operator()(std::size_t r, std::size_t c) { return a_[r * n_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return a_[r * n_ + c]; }
  void zero() { std::fill(a_.begin(), a_.end(), 0.0); }

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;
};

/// LU factorization with partial (row) pivoting, PA = LU.
class LuFactor {
 public:
  /// Throws SolverError when a pivot is zero or non-finite.
  explicit LuFactor(DenseMatrix a);

  std::vector<double> solve(std::span<const double> b) const;
  std::size_t size() const { return lu_.size(); }

 private:
  DenseMatrix lu_;
  std::vector<std::size_t> perm_;
};

}  // namespace dtco

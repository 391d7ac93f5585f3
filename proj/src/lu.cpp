#include "dtco/lu.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "dtco/error.hpp"

namespace dtco {

LuFactor::LuFactor(DenseMatrix a) : lu_(std::move(a)), perm_(lu_.size()) {
  const std::size_t n = lu_.size();
  for (std::size_t i = 0; i < n; ++i) perm_[i] = i;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(lu_(k, k));
    for (std::size_t r = k + 1; r < n; ++r) {
      if (std::abs(lu_(r, k)) > best) {
        best = std::abs(lu_(r, k));
        piv = r;
      }
    }
    if (!(best > 0.0) || !std::isfinite(best)) {
      throw SolverError("singular matrix (zero pivot in column " + std::to_string(k) + ")");
    }
    if (piv != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(lu_(k, c), lu_(piv, c));
      std::swap(perm_[k], perm_[piv]);
    }
    const double inv = 1.0 / lu_(k, k);
    for (std::size_t r = k + 1; r < n; ++r) {
      const double f = lu_(r, k) * inv;
      lu_(r, k) = f;
      if (f == 0.0) continue;
      for (std::size_t c = k + 1; c < n; ++c) lu_(r, c) -= f * lu_(k, c);
    }
  }
}

std::vector<double> LuFactor::solve(std::span<const double> b) const {
  const std::size_t n = lu_.size();
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
  for (std::size_t i = 0; i < n; ++i) {
    double s = x[i];
    for (std::size_t c = 0; c < i; ++c) s -= lu_(i, c) * x[c];
    x[i] = s;
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = x[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= lu_(i, c) * x[c];
    x[i] = s / lu_(i, i);
  }
  return x;
}

}  // namespace dtco

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dtco/error.hpp"
#include "dtco/lu.hpp"
#include "dtco/rng.hpp"

using namespace dtco;

TEST_CASE("solves random well-conditioned systems") {
  std::mt19937_64 gen(1);
  for (std::size_t n : {1u, 2u, 5u, 17u, 40u}) {
    DenseMatrix a(n);
    std::vector<double> x(n), b(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = uniform(gen, -1, 1);
      for (std::size_t j = 0; j < n; ++j) a(i, j) = uniform(gen, -1, 1) + (i == j ? 4.0 : 0.0);
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) b[i] += a(i, j) * x[j];
    const auto got = LuFactor(a).solve(b);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(got[i] - x[i]) < 1e-12);
  }
}

TEST_CASE("pivots on a zero leading entry") {
  DenseMatrix a(2);
  a(0, 0) = 0;
  a(0, 1) = 1;
  a(1, 0) = 2;
  a(1, 1) = 3;
  const auto x = LuFactor(a).solve(std::vector<double>{1, 8});
  CHECK(x[0] == doctest::Approx(2.5));
  CHECK(x[1] == doctest::Approx(1.0));
}

TEST_CASE("singular matrices are reported") {
  DenseMatrix a(3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) a(i, j) = static_cast<double>(i + j);
  a(2, 0) = a(1, 0) * 2 - a(0, 0);
  a(2, 1) = a(1, 1) * 2 - a(0, 1);
  a(2, 2) = a(1, 2) * 2 - a(0, 2);
  CHECK_THROWS_AS(LuFactor{a}, SolverError);
  DenseMatrix z(2);
  CHECK_THROWS_AS(LuFactor{z}, SolverError);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dtco/error.hpp"
#include "dtco/refdev.hpp"
#include "dtco/rng.hpp"
#include "fd_check.hpp"

using namespace dtco;

TEST_CASE("FinFET closed-form values") {
  const RefFinFETParams p;
  CHECK(eval_nfinfet(p, {0.8, 0.8, 0.0}).id == doctest::Approx(6.47e-5).epsilon(0.005));
  CHECK(eval_nfinfet(p, {0.0, 0.8, 0.0}).id == doctest::Approx(6.4e-11).epsilon(0.05));
  const auto z = eval_nfinfet(p, {0.5, 0.3, 0.3});
  CHECK(z.id == 0.0);
}

TEST_CASE("FinFET is symmetric under drain/source swap") {
  const RefFinFETParams p;
  std::mt19937_64 gen(3);
  for (int i = 0; i < 1000; ++i) {
    const double vg = uniform(gen, -0.2, 1.0), vd = uniform(gen, -0.2, 1.0), vs = uniform(gen, -0.2, 1.0);
    const auto a = eval_nfinfet(p, {vg, vd, vs});
    const auto b = eval_nfinfet(p, {vg, vs, vd});
    CHECK(a.id == -b.id);
    CHECK(a.qg == b.qg);
    CHECK(a.qd == doctest::Approx(b.qs).epsilon(1e-12));
  }
}

TEST_CASE("TFET closed-form values and unidirectionality") {
  const RefTFETParams p;
  CHECK(eval_ntfet(p, {0.9, 0.9, 0.0}).id == doctest::Approx(9.8e-6).epsilon(0.01));
  CHECK(eval_ntfet(p, {0.9, 0.0, 0.9}).id == doctest::Approx(-3.5e-5).epsilon(0.02));
  CHECK(eval_ntfet(p, {0.0, 0.0, 0.0}).id == 0.0);
  // Reverse current is the body diode: nearly gate independent.
  const double r0 = eval_ntfet(p, {0.0, 0.0, 0.9}).id;
  const double r1 = eval_ntfet(p, {0.9, 0.0, 0.9}).id;
  CHECK(std::abs(r1 - r0) / std::abs(r0) < 0.05);
}

TEST_CASE("TFET charges are linear in the terminal voltages") {
  const RefTFETParams p;
  const auto r = eval_ntfet(p, {0.7, 0.2, 0.1});
  CHECK(r.qg == doctest::Approx(2e-15 * 0.5 + 0.5e-15 * 0.6));
  CHECK(r.qd == doctest::Approx(-2e-15 * 0.5));
  CHECK(r.qs == -(r.qg + r.qd));
}

TEST_CASE("conservation identities hold exactly") {
  const RefFinFET fin;
  const RefTFET tfet;
  std::mt19937_64 gen(11);
  for (int i = 0; i < 10000; ++i) {
    const BiasPoint b{uniform(gen, 0, 0.9), uniform(gen, 0, 0.9), uniform(gen, 0, 0.9)};
    for (const DeviceModel* d : {static_cast<const DeviceModel*>(&fin), static_cast<const DeviceModel*>(&tfet)}) {
      const auto r = d->eval(b);
      CHECK(r.ig == 0.0);
      CHECK(r.is == -r.id);
      CHECK(r.qs == -(r.qg + r.qd));
    }
  }
}

TEST_CASE("p-type mirror identity") {
  const auto n = std::make_shared<RefTFET>();
  for (double vref : {0.0, 0.9}) {
    const auto p = mirror_p(n, vref);
    std::mt19937_64 gen(5);
    for (int i = 0; i < 1000; ++i) {
      const BiasPoint b{uniform(gen, 0, 0.9), uniform(gen, 0, 0.9), uniform(gen, 0, 0.9)};
      const auto rp = p->eval(b);
      const auto rn = n->eval({vref - b.vg, vref - b.vd, vref - b.vs});
      CHECK(rp.id == -rn.id);
      CHECK(rp.qg == -rn.qg);
      CHECK(rp.qd == -rn.qd);
      const auto jp = p->jacobian(b), jn = n->jacobian({vref - b.vg, vref - b.vd, vref - b.vs});
      CHECK(jp.di == jn.di);
      CHECK(jp.dq == jn.dq);
    }
  }
}

TEST_CASE("analytic Jacobians agree with finite differences") {
  const RefFinFET fin;
  const RefTFET tfet;
  const auto pfin = mirror_p(std::make_shared<RefFinFET>(), 0.8);
  std::mt19937_64 gen(17);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const BiasPoint b{uniform(gen, 0, 0.9), uniform(gen, 0, 0.9), uniform(gen, 0, 0.9)};
    if (std::abs(b.vd - b.vs) < 1e-3) continue;
    worst = std::max({worst, testing::jacobian_fd_error(fin, b), testing::jacobian_fd_error(tfet, b),
                      testing::jacobian_fd_error(*pfin, b)});
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("parameter validation") {
  RefFinFETParams f;
  f.n_slope = 0.0;
  CHECK_THROWS_AS(RefFinFET{f}, ConfigError);
  RefTFETParams t;
  t.c_gd = 0.0;
  CHECK_THROWS_AS(RefTFET{t}, ConfigError);
  CHECK_NOTHROW(RefTFET(t, true));
  t.b_kane = -1.0;
  CHECK_THROWS_AS(RefTFET(t, true), ConfigError);
}

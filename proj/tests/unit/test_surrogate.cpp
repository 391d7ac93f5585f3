#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "dtco/error.hpp"
#include "dtco/refdev.hpp"
#include "dtco/rng.hpp"
#include "dtco/surrogate.hpp"
#include "fd_check.hpp"

using namespace dtco;

namespace {

NetModel random_net(RegionTag region, std::uint64_t seed, double v_max = 0.9) {
  NetModel m;
  m.params = init_mlp(MLPSpec::hidden(2, 12), seed);
  // Push the current output into a realistic asinh range (|id| up to ~1e-5 A).
  for (double& b : m.params.biases(2)) b = 2.0;
  m.input_norm = InputNorm::from_range(0.0, v_max);
  m.region = region;
  return m;
}

BiasPoint random_bias(std::mt19937_64& gen, double lo = 0.0, double hi = 0.9) {
  return {uniform(gen, lo, hi), uniform(gen, lo, hi), uniform(gen, lo, hi)};
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("dtco_test_" + name)).string();
}

}  // namespace

TEST_CASE("construction identities hold exactly") {
  const auto sym = SurrogateDevice::symmetric(random_net(RegionTag::SymmetricCanonical, 1));
  const auto two = SurrogateDevice::two_region(random_net(RegionTag::TfetFwd, 2), random_net(RegionTag::TfetRev, 3));
  const auto psym = sym.with_polarity(Polarity::P, 0.9);
  std::mt19937_64 gen(4);
  for (int i = 0; i < 10000; ++i) {
    const BiasPoint b = random_bias(gen);
    for (const SurrogateDevice* d : {&sym, &two, &psym}) {
      const auto r = d->eval(b);
      CHECK(r.ig == 0.0);
      CHECK(r.is == -r.id);
      CHECK(r.qs == -(r.qg + r.qd));
    }
    const auto a = sym.eval(b);
    const auto s = sym.eval({b.vg, b.vs, b.vd});
    CHECK(a.id == -s.id);
    CHECK(a.qg == s.qg);
  }
}

TEST_CASE("symmetric surrogate vanishes on the seam") {
  const auto sym = SurrogateDevice::symmetric(random_net(RegionTag::SymmetricCanonical, 5));
  for (double v : {0.0, 0.2, 0.7}) CHECK(sym.eval({0.5, v, v}).id == 0.0);
}

TEST_CASE("p/n mirror identity") {
  const auto n = SurrogateDevice::two_region(random_net(RegionTag::TfetFwd, 6), random_net(RegionTag::TfetRev, 7));
  for (double vref : {0.0, 0.9}) {
    const auto p = n.with_polarity(Polarity::P, vref);
    std::mt19937_64 gen(8);
    for (int i = 0; i < 1000; ++i) {
      const BiasPoint b = random_bias(gen);
      const BiasPoint m{vref - b.vg, vref - b.vd, vref - b.vs};
      const auto rp = p.eval(b), rn = n.eval(m);
      CHECK(rp.id == -rn.id);
      CHECK(rp.qg == -rn.qg);
      CHECK(rp.qd == -rn.qd);
      const auto jp = p.jacobian(b), jn = n.jacobian(m);
      CHECK(jp.di == jn.di);
      CHECK(jp.dq == jn.dq);
    }
  }
}

TEST_CASE("blend midpoint is the average of both nets") {
  const auto fwd = random_net(RegionTag::TfetFwd, 9), rev = random_net(RegionTag::TfetRev, 10);
  const auto two = SurrogateDevice::two_region(fwd, rev);
  const BiasPoint b{0.6, 0.4, 0.4};
  Vec3 vf, vr;
  SurrogateDevice::net_physical(fwd, b, vf, nullptr);
  SurrogateDevice::net_physical(rev, b, vr, nullptr);
  const auto r = two.eval(b);
  CHECK(r.id == doctest::Approx(0.5 * (vf[0] + vr[0])).epsilon(1e-14));
  CHECK(r.qg == doctest::Approx(0.5 * (vf[1] + vr[1])).epsilon(1e-14));
  // Outside the window only one net is used.
  SurrogateDevice::net_physical(fwd, {0.6, 0.5, 0.4}, vf, nullptr);
  CHECK(two.eval({0.6, 0.5, 0.4}).id == vf[0]);
}

TEST_CASE("Jacobian matches finite differences") {
  const auto sym = SurrogateDevice::symmetric(random_net(RegionTag::SymmetricCanonical, 11));
  const auto two = SurrogateDevice::two_region(random_net(RegionTag::TfetFwd, 12), random_net(RegionTag::TfetRev, 13));
  const auto ptwo = two.with_polarity(Polarity::P, 0.9);
  std::mt19937_64 gen(14);
  double worst = 0.0, worst_window = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const BiasPoint b = random_bias(gen);
    if (std::abs(b.vd - b.vs) > 2.1e-3) {
      worst = std::max({worst, testing::jacobian_fd_error(sym, b), testing::jacobian_fd_error(two, b),
                        testing::jacobian_fd_error(ptwo, b)});
    }
    BiasPoint w = b;
    w.vd = b.vs + uniform(gen, -1.9e-3, 1.9e-3);
    worst_window = std::max(worst_window, testing::jacobian_fd_error(two, w));
  }
  CHECK(worst < 1e-5);
  CHECK(worst_window < 1e-3);
}

TEST_CASE("current rows of the Jacobian") {
  const auto sym = SurrogateDevice::symmetric(random_net(RegionTag::SymmetricCanonical, 15));
  const auto j = sym.jacobian({0.5, 0.1, 0.6});
  for (int c = 0; c < 3; ++c) {
    CHECK(j.di[2][c] == -j.di[0][c]);
    CHECK(j.di[1][c] == 0.0);
  }
}

TEST_CASE("construction checks") {
  CHECK_THROWS_AS(SurrogateDevice::symmetric(random_net(RegionTag::TfetFwd, 1)), ConfigError);
  CHECK_THROWS_AS(SurrogateDevice::two_region(random_net(RegionTag::TfetRev, 1), random_net(RegionTag::TfetRev, 2)),
                  ConfigError);
  auto rev = random_net(RegionTag::TfetRev, 2, 0.8);
  CHECK_THROWS_AS(SurrogateDevice::two_region(random_net(RegionTag::TfetFwd, 1), rev), ConfigError);
}

TEST_CASE("out-of-box evaluations are counted") {
  const auto sym = SurrogateDevice::symmetric(random_net(RegionTag::SymmetricCanonical, 1, 0.8));
  sym.eval({0.4, 0.4, 0.1});
  CHECK(sym.out_of_box_count() == 0);
  const auto r = sym.eval({0.4, 1.2, 0.1});
  CHECK(std::isfinite(r.id));
  CHECK(sym.out_of_box_count() >= 1);
}

TEST_CASE("model files load into the right wrapper") {
  auto net = random_net(RegionTag::SymmetricCanonical, 21);
  const std::string p1 = temp_path("sym.json"), p2 = temp_path("two.json"), p3 = temp_path("psym.json");
  save_model(net, p1);
  const auto sym = load_surrogate(p1);
  CHECK(sym.mode() == SurrogateMode::SymmetricSwap);
  const BiasPoint b{0.7, 0.2, 0.5};
  CHECK(sym.eval(b).id == SurrogateDevice::symmetric(net).eval(b).id);

  net.polarity = Polarity::P;
  save_model(net, p3);
  CHECK(load_surrogate(p3).polarity() == Polarity::P);

  const auto fwd = random_net(RegionTag::TfetFwd, 22), rev = random_net(RegionTag::TfetRev, 23);
  save_two_region(fwd, rev, 2e-3, p2);
  const auto two = load_surrogate(p2);
  CHECK(two.mode() == SurrogateMode::TwoRegion);
  CHECK(two.blend_halfwidth() == 2e-3);
  CHECK(two.eval(b).qd == SurrogateDevice::two_region(fwd, rev).eval(b).qd);
  CHECK_THROWS_AS(load_surrogate(temp_path("nope.json")), IoError);
}

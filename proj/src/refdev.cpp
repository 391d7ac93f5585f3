#include "dtco/refdev.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "dtco/error.hpp"
#include "dtco/numeric.hpp"

namespace dtco {

void RefFinFETParams::validate() const {
  if (!(i_spec > 0.0) || !(c_gate > 0.0) || !(n_slope >= 1.0) || !(vt_thermal > 0.0) ||
      !std::isfinite(vth)) {
    throw ConfigError("invalid FinFET parameters");
  }
}

void RefTFETParams::validate(bool allow_zero_cgd) const {
  const bool cgd_ok = allow_zero_cgd ? c_gd >= 0.0 : (c_gd > 0.0 && c_gd > c_gs);
  if (!(a_kane > 0.0) || !(b_kane > 0.0) || !(i_diode > 0.0) || !(c_gs > 0.0) || !cgd_ok ||
      !(n_diode > 0.0) || !(vt_thermal > 0.0)) {
    throw ConfigError("invalid TFET parameters");
  }
}

namespace {

// F(x) = softplus(x/2)^2 and its derivative.
struct Ekv {
  double f;
  double df;
};

Ekv ekv_interp(double x) {
  const double sp = softplus(0.5 * x);
  return {sp * sp, sp * sigmoid(0.5 * x)};
}

constexpr double kLimExpMax = 80.0;

// exp(x) continued linearly above kLimExpMax.
double limexp(double x) {
  if (x <= kLimExpMax) return std::exp(x);
  return std::exp(kLimExpMax) * (1.0 + x - kLimExpMax);
}

double limexp_deriv(double x) { return std::exp(std::min(x, kLimExpMax)); }

double limexpm1(double x) { return x <= kLimExpMax ? std::expm1(x) : limexp(x) - 1.0; }

}  // namespace

DeviceResponse eval_nfinfet(const RefFinFETParams& p, const BiasPoint& b) {
  const double vp = (b.vg - p.vth) / p.n_slope;
  const double fs = ekv_interp((vp - b.vs) / p.vt_thermal).f;
  const double fd = ekv_interp((vp - b.vd) / p.vt_thermal).f;

  DeviceResponse r;
  r.id = p.i_spec * (fs - fd);
  r.ig = 0.0;
  r.is = -r.id;

  const double hs = smooth_relu(b.vg - p.vth - b.vs, p.vt_thermal);
  const double hd = smooth_relu(b.vg - p.vth - b.vd, p.vt_thermal);
  r.qg = p.c_gate * (hs + hd) / 2.0;
  r.qd = -p.c_gate * (0.4 * hd + 0.1 * hs);
  r.qs = -(r.qg + r.qd);
  return r;
}

DeviceJacobian jacobian_nfinfet(const RefFinFETParams& p, const BiasPoint& b) {
  const double vt = p.vt_thermal;
  const double vp = (b.vg - p.vth) / p.n_slope;
  const double dfs = ekv_interp((vp - b.vs) / vt).df;
  const double dfd = ekv_interp((vp - b.vd) / vt).df;

  DeviceJacobian j;
  j.di[0] = {p.i_spec * (dfs - dfd) / (p.n_slope * vt), p.i_spec * dfd / vt, -p.i_spec * dfs / vt};
  j.di[1] = {0.0, 0.0, 0.0};
  for (int c = 0; c < 3; ++c) j.di[2][c] = -j.di[0][c];

  const double gs = smooth_relu_deriv(b.vg - p.vth - b.vs, vt);
  const double gd = smooth_relu_deriv(b.vg - p.vth - b.vd, vt);
  j.dq[0] = {p.c_gate * (gs + gd) / 2.0, -p.c_gate * gd / 2.0, -p.c_gate * gs / 2.0};
  j.dq[1] = {-p.c_gate * (0.4 * gd + 0.1 * gs), 0.4 * p.c_gate * gd, 0.1 * p.c_gate * gs};
  for (int c = 0; c < 3; ++c) j.dq[2][c] = -(j.dq[0][c] + j.dq[1][c]);
  return j;
}

namespace {

constexpr double kVovGuard = 1e-6;

// Kane prefactor g(vov) = a vov^2 exp(-b / (vov + guard)).
double kane(const RefTFETParams& p, double vov) {
  return p.a_kane * vov * vov * std::exp(-p.b_kane / (vov + kVovGuard));
}

double kane_deriv(const RefTFETParams& p, double vov) {
  const double den = vov + kVovGuard;
  const double e = std::exp(-p.b_kane / den);
  return p.a_kane * e * (2.0 * vov + vov * vov * p.b_kane / (den * den));
}

// Drain-bias factor: ~1 for u >> vt, 0 at u = 0, ~exp(u/vt) suppression in reverse.
double drain_factor(double u, double vt) { return std::tanh(u / (2.0 * vt)) * sigmoid(u / vt); }

double drain_factor_deriv(double u, double vt) {
  const double t = std::tanh(u / (2.0 * vt));
  const double s = sigmoid(u / vt);
  return (1.0 - t * t) / (2.0 * vt) * s + t * s * (1.0 - s) / vt;
}

}  // namespace

DeviceResponse eval_ntfet(const RefTFETParams& p, const BiasPoint& b) {
  const double vt = p.vt_thermal;
  const double u = b.vd - b.vs;
  const double vov = smooth_relu(b.vg - b.vs - p.vth_tun, vt);
  const double i_tun = kane(p, vov) * drain_factor(u, vt);
  const double i_pin = -p.i_diode * limexpm1(-u / (p.n_diode * vt));

  DeviceResponse r;
  r.id = i_tun + i_pin;
  r.ig = 0.0;
  r.is = -r.id;
  r.qg = p.c_gd * (b.vg - b.vd) + p.c_gs * (b.vg - b.vs);
  r.qd = -p.c_gd * (b.vg - b.vd);
  r.qs = -(r.qg + r.qd);
  return r;
}

DeviceJacobian jacobian_ntfet(const RefTFETParams& p, const BiasPoint& b) {
  const double vt = p.vt_thermal;
  const double u = b.vd - b.vs;
  const double x = b.vg - b.vs - p.vth_tun;
  const double vov = smooth_relu(x, vt);
  const double dvov = smooth_relu_deriv(x, vt);

  const double g = kane(p, vov);
  const double dg = kane_deriv(p, vov);
  const double s = drain_factor(u, vt);
  const double ds = drain_factor_deriv(u, vt);
  const double nvt = p.n_diode * vt;
  const double dpin = p.i_diode * limexp_deriv(-u / nvt) / nvt;

  const double d_vg = dg * dvov * s;
  const double d_u = g * ds + dpin;

  DeviceJacobian j;
  j.di[0] = {d_vg, d_u, -d_vg - d_u};
  j.di[1] = {0.0, 0.0, 0.0};
  for (int c = 0; c < 3; ++c) j.di[2][c] = -j.di[0][c];

  j.dq[0] = {p.c_gd + p.c_gs, -p.c_gd, -p.c_gs};
  j.dq[1] = {-p.c_gd, p.c_gd, 0.0};
  for (int c = 0; c < 3; ++c) j.dq[2][c] = -(j.dq[0][c] + j.dq[1][c]);
  return j;
}

RefFinFET::RefFinFET(RefFinFETParams p) : p_(p) { p_.validate(); }

RefTFET::RefTFET(RefTFETParams p, bool allow_zero_cgd) : p_(p) { p_.validate(allow_zero_cgd); }

MirroredDevice::MirroredDevice(DeviceModelPtr n_type, double vref) : n_(std::move(n_type)), vref_(vref) {
  if (!n_) throw ConfigError("mirror_p: null n-type evaluator");
}

namespace {

DeviceResponse negate(const DeviceResponse& r) {
  return {-r.id, -r.ig, -r.is, -r.qg, -r.qd, -r.qs};
}

}  // namespace

DeviceResponse MirroredDevice::eval(const BiasPoint& b) const { return negate(n_->eval(reflect(b))); }

// Both outputs and inputs flip sign, so the derivative is unchanged.
DeviceJacobian MirroredDevice::jacobian(const BiasPoint& b) const { return n_->jacobian(reflect(b)); }

void MirroredDevice::eval_with_jacobian(const BiasPoint& b, DeviceResponse& r, DeviceJacobian& j) const {
  n_->eval_with_jacobian(reflect(b), r, j);
  r = negate(r);
}

DeviceModelPtr mirror_p(DeviceModelPtr n_type, double vref) {
  return std::make_shared<MirroredDevice>(std::move(n_type), vref);
}

}  // namespace dtco

#pragma once

#include <algorithm>
#include <cmath>

#include "dtco/device.hpp"

namespace dtco::testing {

/// Largest row-wise relative error between the analytic Jacobian and central
/// differences of eval. Each row is scaled by its own largest entry, floored at
/// |row value| / 1 V: on flat stretches (a saturated diode leakage, say) the
/// derivatives sit below the cancellation noise of the difference itself.
inline double jacobian_fd_error(const DeviceModel& dev, const BiasPoint& b, double h = 1e-6) {
  const DeviceJacobian j = dev.jacobian(b);
  DeviceJacobian fd{};
  for (int c = 0; c < 3; ++c) {
    BiasPoint p = b, m = b;
    (c == 0 ? p.vg : c == 1 ? p.vd : p.vs) += h;
    (c == 0 ? m.vg : c == 1 ? m.vd : m.vs) -= h;
    const DeviceResponse rp = dev.eval(p), rm = dev.eval(m);
    const double ip[3] = {rp.id, rp.ig, rp.is}, im[3] = {rm.id, rm.ig, rm.is};
    const double qp[3] = {rp.qg, rp.qd, rp.qs}, qm[3] = {rm.qg, rm.qd, rm.qs};
    for (int r = 0; r < 3; ++r) {
      fd.di[r][c] = (ip[r] - im[r]) / (2 * h);
      fd.dq[r][c] = (qp[r] - qm[r]) / (2 * h);
    }
  }
  const DeviceResponse r0 = dev.eval(b);
  const double iv[3] = {r0.id, r0.ig, r0.is}, qv[3] = {r0.qg, r0.qd, r0.qs};
  double worst = 0.0;
  for (const auto* pair : {&j.di, &j.dq}) {
    const Mat3& an = *pair;
    const Mat3& num = pair == &j.di ? fd.di : fd.dq;
    for (int r = 0; r < 3; ++r) {
      double scale = std::abs(pair == &j.di ? iv[r] : qv[r]) / 1.0;
      for (int c = 0; c < 3; ++c) scale = std::max(scale, std::abs(an[r][c]));
      if (scale == 0.0) {
        for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(num[r][c]) > 0 ? 1.0 : 0.0);
        continue;
      }
      for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(an[r][c] - num[r][c]) / scale);
    }
  }
  return worst;
}

}  // namespace dtco::testing

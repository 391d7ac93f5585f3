#pragma once

#include <array>
#include <memory>

namespace dtco {

/// Terminal voltages of a three-terminal device, all relative to a common reference.
struct BiasPoint {
  double vg = 0.0;
  double vd = 0.0;
  double vs = 0.0;

  std::array<double, 3> as_array() const { return {vg, vd, vs}; }
};

/// Currents flow into the terminals.
struct DeviceResponse {
  double id = 0.0;
  double ig = 0.0;
  double is = 0.0;
  double qg = 0.0;
  double qd = 0.0;
  double qs = 0.0;
};

using Mat3 = std::array<std::array<double, 3>, 3>;

/// Terminal derivatives. Rows of di: (id, ig, is); rows of dq: (qg, qd, qs);
/// columns: (vg, vd, vs).
struct DeviceJacobian {
  Mat3 di{};
  Mat3 dq{};
};

/// Common evaluator contract shared by the analytic reference devices and the
/// neural surrogates. Implementations are immutable and safe to share across threads.
class DeviceModel {
 public:
  virtual ~DeviceModel() = default;

  virtual DeviceResponse eval(const BiasPoint& b) const = 0;
  virtual DeviceJacobian jacobian(const BiasPoint& b) const = 0;

  /// Response and Jacobian together; the default calls both.
  virtual void eval_with_jacobian(const BiasPoint& b, DeviceResponse& r, DeviceJacobian& j) const {
    r = eval(b);
    j = jacobian(b);
  }
};

using DeviceModelPtr = std::shared_ptr<const DeviceModel>;

}  // namespace dtco

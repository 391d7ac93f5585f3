#pragma once

#include "dtco/device.hpp"

namespace dtco {

/// EKV-style symmetric FinFET stand-in.
struct RefFinFETParams {
  double vth = 0.3;
  double n_slope = 1.2;
  double vt_thermal = 0.0259;
  double i_spec = 1e-6;
  double c_gate = 1e-15;

  void validate() const;
};

/// Band-to-band tunneling FET with a p-i-n reverse diode.
struct RefTFETParams {
  double a_kane = 1e-4;
  double b_kane = 1.5;
  double vth_tun = 0.1;
  double i_diode = 1e-12;
  double n_diode = 2.0;
  double c_gd = 2e-15;
  double c_gs = 0.5e-15;
  double vt_thermal = 0.0259;

  /// `allow_zero_cgd` admits c_gd = 0 for the coupling ablation study.
  void validate(bool allow_zero_cgd = false) const;
};

DeviceResponse eval_nfinfet(const RefFinFETParams& p, const BiasPoint& b);
DeviceJacobian jacobian_nfinfet(const RefFinFETParams& p, const BiasPoint& b);

DeviceResponse eval_ntfet(const RefTFETParams& p, const BiasPoint& b);
DeviceJacobian jacobian_ntfet(const RefTFETParams& p, const BiasPoint& b);

class RefFinFET final : public DeviceModel {
 public:
  explicit RefFinFET(RefFinFETParams p = {});
  DeviceResponse eval(const BiasPoint& b) const override { return eval_nfinfet(p_, b); }
  DeviceJacobian jacobian(const BiasPoint& b) const override { return jacobian_nfinfet(p_, b); }
  const RefFinFETParams& params() const { return p_; }

 private:
  RefFinFETParams p_;
};

class RefTFET final : public DeviceModel {
 public:
  explicit RefTFET(RefTFETParams p = {}, bool allow_zero_cgd = false);
  DeviceResponse eval(const BiasPoint& b) const override { return eval_ntfet(p_, b); }
  DeviceJacobian jacobian(const BiasPoint& b) const override { return jacobian_ntfet(p_, b); }
  const RefTFETParams& params() const { return p_; }

 private:
  RefTFETParams p_;
};

/// p-type evaluator built from an n-type one:
///   I_p(v) = -I_n(vref - v),  Q_p(v) = -Q_n(vref - v)
/// vref = 0 gives the plain point reflection; circuits pass the supply voltage so
/// the mirrored device sees the same [0, VDD] window as the n-type.
class MirroredDevice final : public DeviceModel {
 public:
  MirroredDevice(DeviceModelPtr n_type, double vref = 0.0);
  DeviceResponse eval(const BiasPoint& b) const override;
  DeviceJacobian jacobian(const BiasPoint& b) const override;
  void eval_with_jacobian(const BiasPoint& b, DeviceResponse& r, DeviceJacobian& j) const override;

 private:
  BiasPoint reflect(const BiasPoint& b) const { return {vref_ - b.vg, vref_ - b.vd, vref_ - b.vs}; }

  DeviceModelPtr n_;
  double vref_;
};

DeviceModelPtr mirror_p(DeviceModelPtr n_type, double vref = 0.0);

}  // namespace dtco

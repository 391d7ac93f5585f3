#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <string>

#include "dtco/device.hpp"
#include "dtco/mlp.hpp"

namespace dtco {

enum class SurrogateMode {
  SymmetricSwap,  // one net trained on vd >= vs, other half by source/drain swap
  TwoRegion,      // forward and reverse nets stitched by a linear blend around vd = vs
  Plain,          // one net used as-is everywhere
};

/// Trained networks wrapped as a full three-terminal device. Construction
/// identities hold exactly at every bias: ig = 0, is = -id, qs = -(qg + qd).
class SurrogateDevice final : public DeviceModel {
 public:
  static constexpr double kDefaultBlendHalfwidth = 2e-3;

  static SurrogateDevice symmetric(NetModel net);
  static SurrogateDevice two_region(NetModel fwd, NetModel rev, double blend_halfwidth = kDefaultBlendHalfwidth);
  static SurrogateDevice plain(NetModel net);

  /// Copy evaluated as the given polarity; p-type uses I_p(v) = -I_n(vref - v).
  SurrogateDevice with_polarity(Polarity pol, double vref = 0.0) const;

  DeviceResponse eval(const BiasPoint& b) const override;
  DeviceJacobian jacobian(const BiasPoint& b) const override;
  void eval_with_jacobian(const BiasPoint& b, DeviceResponse& r, DeviceJacobian& j) const override;

  SurrogateMode mode() const { return mode_; }
  Polarity polarity() const { return polarity_; }
  double mirror_vref() const { return vref_; }
  double blend_halfwidth() const { return blend_; }
  const NetModel& primary_net() const { return fwd_; }
  const NetModel* reverse_net() const { return rev_ ? &*rev_ : nullptr; }

  /// Number of n-path evaluations that fell outside the training box.
  long out_of_box_count() const { return out_of_box_->load(); }

  /// Raw physical (id, qg, qd) of one net, no symmetry or blending applied.
  static void net_physical(const NetModel& net, const BiasPoint& b, Vec3& out, Mat3* jac);

 private:
  SurrogateDevice(SurrogateMode mode, NetModel fwd, std::optional<NetModel> rev, double blend);

  void eval_n(const BiasPoint& b, DeviceResponse& r, DeviceJacobian* j) const;
  void note_box(const BiasPoint& b) const;

  SurrogateMode mode_;
  NetModel fwd_;
  std::optional<NetModel> rev_;
  double blend_ = kDefaultBlendHalfwidth;
  Polarity polarity_ = Polarity::N;
  double vref_ = 0.0;
  std::shared_ptr<std::atomic<long>> out_of_box_;
};

/// Two-region bundle: {"version", "mode": "two_region", "blend_halfwidth",
/// "nets": {"fwd": <model>, "rev": <model>}}.
void save_two_region(const NetModel& fwd, const NetModel& rev, double blend_halfwidth, const std::string& path);

/// Loads either a single-net model file or a two-region bundle. The mode follows
/// the file: symmetric_canonical nets get the swap wrapper, bundles the blend.
SurrogateDevice load_surrogate(const std::string& path);

}  // namespace dtco

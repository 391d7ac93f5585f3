#include "dtco/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "dtco/error.hpp"
#include "dtco/numeric.hpp"

namespace dtco {

SurrogateDevice::SurrogateDevice(SurrogateMode mode, NetModel fwd, std::optional<NetModel> rev, double blend)
    : mode_(mode),
      fwd_(std::move(fwd)),
      rev_(std::move(rev)),
      blend_(blend),
      out_of_box_(std::make_shared<std::atomic<long>>(0)) {
  fwd_.params.validate();
  if (rev_) rev_->params.validate();
}

SurrogateDevice SurrogateDevice::symmetric(NetModel net) {
  if (net.region != RegionTag::SymmetricCanonical) {
    throw ConfigError("symmetric surrogate needs a net trained on symmetric_canonical data");
  }
  return SurrogateDevice(SurrogateMode::SymmetricSwap, std::move(net), std::nullopt, 0.0);
}

SurrogateDevice SurrogateDevice::two_region(NetModel fwd, NetModel rev, double blend_halfwidth) {
  if (fwd.region != RegionTag::TfetFwd || rev.region != RegionTag::TfetRev) {
    throw ConfigError("two-region surrogate needs tfet_fwd and tfet_rev nets");
  }
  if (fwd.transform.i_ref != rev.transform.i_ref || fwd.transform.q_ref != rev.transform.q_ref ||
      fwd.input_norm.offset != rev.input_norm.offset || fwd.input_norm.half_range != rev.input_norm.half_range) {
    throw ConfigError("two-region nets must share transform and input normalization");
  }
  if (!(blend_halfwidth > 0.0)) throw ConfigError("blend_halfwidth must be positive");
  return SurrogateDevice(SurrogateMode::TwoRegion, std::move(fwd), std::move(rev), blend_halfwidth);
}

SurrogateDevice SurrogateDevice::plain(NetModel net) {
  return SurrogateDevice(SurrogateMode::Plain, std::move(net), std::nullopt, 0.0);
}

SurrogateDevice SurrogateDevice::with_polarity(Polarity pol, double vref) const {
  SurrogateDevice copy = *this;
  copy.polarity_ = pol;
  copy.vref_ = vref;
  copy.out_of_box_ = std::make_shared<std::atomic<long>>(0);
  return copy;
}

void SurrogateDevice::net_physical(const NetModel& net, const BiasPoint& b, Vec3& out, Mat3* jac) {
  const Vec3 x = net.input_norm.apply(b);
  Vec3 y;
  const auto& t = net.transform;
  if (!jac) {
    y = forward(net.params, x);
  } else {
    Mat3 jy;
    forward_with_jacobian(net.params, x, y, jy);
    const double cid = t.i_ref * std::cosh(y[0]);
    for (int c = 0; c < 3; ++c) {
      const double dxdv = 1.0 / net.input_norm.half_range[c];
      (*jac)[0][c] = cid * jy[0][c] * dxdv;
      (*jac)[1][c] = t.q_ref * jy[1][c] * dxdv;
      (*jac)[2][c] = t.q_ref * jy[2][c] * dxdv;
    }
  }
  const auto phys = inverse_transform(y, t);
  out = {phys.id, phys.qg, phys.qd};
}

void SurrogateDevice::note_box(const BiasPoint& b) const {
  if (fwd_.input_norm.contains(b, 1e-9)) return;
  if (out_of_box_->fetch_add(1) == 0) {
    std::cerr << "warning: surrogate evaluated outside its training box at (vg=" << b.vg << ", vd=" << b.vd
              << ", vs=" << b.vs << "); further occurrences are counted silently\n";
  }
}

namespace {

// Fills the derived rows: ig = 0, is = -id, qs = -(qg + qd).
void complete(DeviceResponse& r, DeviceJacobian* j) {
  r.ig = 0.0;
  r.is = -r.id;
  r.qs = -(r.qg + r.qd);
  if (j) {
    for (int c = 0; c < 3; ++c) {
      j->di[1][c] = 0.0;
      j->di[2][c] = -j->di[0][c];
      j->dq[2][c] = -(j->dq[0][c] + j->dq[1][c]);
    }
  }
}

}  // namespace

void SurrogateDevice::eval_n(const BiasPoint& b, DeviceResponse& r, DeviceJacobian* j) const {
  note_box(b);
  Vec3 v{};
  Mat3 dv{};
  switch (mode_) {
    case SurrogateMode::Plain: {
      net_physical(fwd_, b, v, j ? &dv : nullptr);
      r.id = v[0];
      r.qg = v[1];
      r.qd = v[2];
      if (j) {
        j->di[0] = dv[0];
        j->dq[0] = dv[1];
        j->dq[1] = dv[2];
      }
      break;
    }
    case SurrogateMode::SymmetricSwap: {
      // Canonical point (vg, hi, lo) with hi >= lo. The current is referenced to
      // its value on the seam, P(vg, lo, lo), which makes it vanish at vd = vs
      // and stay C1 across the seam.
      const bool swapped = b.vd < b.vs;
      const double hi = swapped ? b.vs : b.vd;
      const double lo = swapped ? b.vd : b.vs;
      Vec3 seam{};
      Mat3 dseam{};
      net_physical(fwd_, {b.vg, hi, lo}, v, j ? &dv : nullptr);
      net_physical(fwd_, {b.vg, lo, lo}, seam, j ? &dseam : nullptr);
      const double id_c = v[0] - seam[0];
      if (!swapped) {
        r.id = id_c;
        r.qg = v[1];
        r.qd = v[2];
      } else {
        r.id = -id_c;
        r.qg = v[1];
        r.qd = -(v[1] + v[2]);
      }
      if (j) {
        // Canonical-coordinate gradients (d/dvg, d/dhi, d/dlo).
        const std::array<double, 3> gid{dv[0][0] - dseam[0][0], dv[0][1], dv[0][2] - dseam[0][1] - dseam[0][2]};
        const std::array<double, 3> gqg = dv[1];
        const std::array<double, 3> gqd = dv[2];
        auto place = [&](const std::array<double, 3>& g, double sign) -> std::array<double, 3> {
          // Map (vg, hi, lo) back to (vg, vd, vs).
          if (!swapped) return {sign * g[0], sign * g[1], sign * g[2]};
          return {sign * g[0], sign * g[2], sign * g[1]};
        };
        j->di[0] = place(gid, swapped ? -1.0 : 1.0);
        j->dq[0] = place(gqg, 1.0);
        if (!swapped) {
          j->dq[1] = place(gqd, 1.0);
        } else {
          j->dq[1] = place({gqg[0] + gqd[0], gqg[1] + gqd[1], gqg[2] + gqd[2]}, -1.0);
        }
      }
      break;
    }
    case SurrogateMode::TwoRegion: {
      const double u = b.vd - b.vs;
      if (u >= blend_ || u <= -blend_) {
        net_physical(u > 0.0 ? fwd_ : *rev_, b, v, j ? &dv : nullptr);
      } else {
        Vec3 vf{}, vr{};
        Mat3 df{}, dr{};
        net_physical(fwd_, b, vf, j ? &df : nullptr);
        net_physical(*rev_, b, vr, j ? &dr : nullptr);
        const double w = (u + blend_) / (2.0 * blend_);
        const double dw = 1.0 / (2.0 * blend_);  // d w / d vd = -d w / d vs
        for (int k = 0; k < 3; ++k) {
          v[k] = w * vf[k] + (1.0 - w) * vr[k];
          if (j) {
            for (int c = 0; c < 3; ++c) dv[k][c] = w * df[k][c] + (1.0 - w) * dr[k][c];
            dv[k][1] += (vf[k] - vr[k]) * dw;
            dv[k][2] -= (vf[k] - vr[k]) * dw;
          }
        }
      }
      // Charges: both nets are shifted by half their disagreement at the seam
      // point (vg, m, m), m = (vd + vs) / 2, so they meet there. Otherwise the
      // blend turns a small charge mismatch into a large (often negative)
      // capacitance across the window.
      {
        const BiasPoint seam{b.vg, 0.5 * (b.vd + b.vs), 0.5 * (b.vd + b.vs)};
        Vec3 sf{}, sr{};
        Mat3 dsf{}, dsr{};
        net_physical(fwd_, seam, sf, j ? &dsf : nullptr);
        net_physical(*rev_, seam, sr, j ? &dsr : nullptr);
        // fwd only: -delta/2; rev only: +delta/2; blended: (1/2 - w) delta.
        const double w = std::clamp((u + blend_) / (2.0 * blend_), 0.0, 1.0);
        const double sh = 0.5 - w;
        const bool inside = u > -blend_ && u < blend_;
        for (int k = 1; k < 3; ++k) {
          const double delta = sf[k] - sr[k];
          v[k] += sh * delta;
          if (j) {
            const double dg = dsf[k][0] - dsr[k][0];
            const double dm = 0.5 * (dsf[k][1] + dsf[k][2] - dsr[k][1] - dsr[k][2]);
            dv[k][0] += sh * dg;
            dv[k][1] += sh * dm;
            dv[k][2] += sh * dm;
            if (inside) {
              const double dw = 1.0 / (2.0 * blend_);
              dv[k][1] -= dw * delta;
              dv[k][2] += dw * delta;
            }
          }
        }
      }
      r.id = v[0];
      r.qg = v[1];
      r.qd = v[2];
      if (j) {
        j->di[0] = dv[0];
        j->dq[0] = dv[1];
        j->dq[1] = dv[2];
      }
      break;
    }
  }
  complete(r, j);
}

DeviceResponse SurrogateDevice::eval(const BiasPoint& b) const {
  DeviceResponse r;
  if (polarity_ == Polarity::N) {
    eval_n(b, r, nullptr);
    return r;
  }
  eval_n({vref_ - b.vg, vref_ - b.vd, vref_ - b.vs}, r, nullptr);
  return {-r.id, -r.ig, -r.is, -r.qg, -r.qd, -r.qs};
}

DeviceJacobian SurrogateDevice::jacobian(const BiasPoint& b) const {
  DeviceResponse r;
  DeviceJacobian j;
  eval_with_jacobian(b, r, j);
  return j;
}

void SurrogateDevice::eval_with_jacobian(const BiasPoint& b, DeviceResponse& r, DeviceJacobian& j) const {
  if (polarity_ == Polarity::N) {
    eval_n(b, r, &j);
    return;
  }
  // Outputs and inputs both flip sign, so the Jacobian carries over unchanged.
  eval_n({vref_ - b.vg, vref_ - b.vd, vref_ - b.vs}, r, &j);
  r = {-r.id, -r.ig, -r.is, -r.qg, -r.qd, -r.qs};
}

void save_two_region(const NetModel& fwd, const NetModel& rev, double blend_halfwidth, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "{\n\"version\": " << kModelFileVersion << ",\n\"mode\": \"two_region\",\n\"blend_halfwidth\": "
      << fmt17(blend_halfwidth) << ",\n\"polarity\": \"" << to_string(fwd.polarity) << "\",\n\"nets\": {\n\"fwd\": "
      << model_to_json(fwd) << ",\n\"rev\": " << model_to_json(rev) << "}\n}\n";
  if (!out) throw IoError("write failed: " + path);
}

SurrogateDevice load_surrogate(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("model file " + path + ": " + e.what());
  }
  if (j.is_object() && j.value("mode", "") == "two_region") {
    try {
      if (j.at("version").get<int>() != kModelFileVersion) throw IoError("model file " + path + ": unsupported version");
      auto fwd = model_from_json(j.at("nets").at("fwd").dump());
      auto rev = model_from_json(j.at("nets").at("rev").dump());
      const Polarity pol = polarity_from_string(j.value("polarity", "n"));
      auto dev = SurrogateDevice::two_region(std::move(fwd), std::move(rev), j.at("blend_halfwidth").get<double>());
      return pol == Polarity::P ? dev.with_polarity(pol) : dev;
    } catch (const nlohmann::json::exception& e) {
      throw IoError("model file " + path + ": " + e.what());
    } catch (const ConfigError& e) {
      throw IoError("model file " + path + ": " + e.what());
    }
  }
  NetModel net = model_from_json(text);
  const Polarity pol = net.polarity;
  auto dev = net.region == RegionTag::SymmetricCanonical ? SurrogateDevice::symmetric(std::move(net))
                                                         : SurrogateDevice::plain(std::move(net));
  return pol == Polarity::P ? dev.with_polarity(pol) : dev;
}

}  // namespace dtco

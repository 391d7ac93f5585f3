#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dtco/device.hpp"

namespace dtco {

using Vec3 = std::array<double, 3>;

/// Target scaling: currents through asinh(id / i_ref), charges linearly by q_ref.
struct TransformDescriptor {
  double i_ref = 1e-9;
  double q_ref = 1e-15;

  void validate() const;
};

/// Affine map of each terminal voltage onto [-1, 1].
struct InputNorm {
  Vec3 offset{0.0, 0.0, 0.0};
  Vec3 half_range{1.0, 1.0, 1.0};

  static InputNorm from_range(double v_min, double v_max);
  Vec3 apply(const BiasPoint& b) const {
    return {(b.vg - offset[0]) / half_range[0], (b.vd - offset[1]) / half_range[1],
            (b.vs - offset[2]) / half_range[2]};
  }
  bool contains(const BiasPoint& b, double slack = 1e-12) const;
};

enum class RegionTag { SymmetricCanonical, TfetFwd, TfetRev, Unrestricted };

std::string to_string(RegionTag tag);
RegionTag region_from_string(const std::string& s);

struct Sample {
  BiasPoint bias;
  Vec3 targets{};  // transformed (id, qg, qd)
};

struct Dataset {
  std::vector<Sample> samples;
  InputNorm input_norm;
  TransformDescriptor transform;
  RegionTag region = RegionTag::Unrestricted;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

/// (asinh(id / i_ref), qg / q_ref, qd / q_ref)
Vec3 transform_targets(const DeviceResponse& raw, const TransformDescriptor& t);

struct PhysicalTargets {
  double id = 0.0;
  double qg = 0.0;
  double qd = 0.0;
};
PhysicalTargets inverse_transform(const Vec3& y, const TransformDescriptor& t);

/// Number of points per axis, or ConfigError when (v_max - v_min) / step is not integral.
int grid_axis_count(double v_min, double v_max, double step);

/// Full Cartesian bias grid over (vg, vd, vs), vg outermost.
Dataset generate_grid(const DeviceModel& dev, double v_min, double v_max, double step,
                      const TransformDescriptor& t = {});

/// Keeps only vd >= vs; the rest is recoverable through the source/drain swap.
Dataset canonicalize_symmetric(const Dataset& ds);

/// Forward (vd >= vs) and reverse (vd <= vs) halves; vd == vs lands in both.
std::pair<Dataset, Dataset> split_regions_tfet(const Dataset& ds);

/// Uniform random biases in [v_min, v_max]^3 from a seeded mt19937_64.
Dataset sample_random(const DeviceModel& dev, double v_min, double v_max, std::size_t count,
                      std::uint64_t seed, const TransformDescriptor& t = {});

/// Deterministic subset of `n` samples (seeded shuffle, first n). n >= size returns a copy.
Dataset subsample(const Dataset& ds, std::size_t n, std::uint64_t seed);

void save_csv(const Dataset& ds, const std::string& path);
Dataset load_csv(const std::string& path);

}  // namespace dtco

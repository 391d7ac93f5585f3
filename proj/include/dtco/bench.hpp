#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dtco/dataset.hpp"
#include "dtco/device.hpp"
#include "dtco/mlp.hpp"
#include "dtco/simulator.hpp"

namespace dtco::bench {

/// Region used for current error statistics: |id_ref| above this.
inline constexpr double kAboveThreshold = 1e-9;
inline constexpr double kCurrentFloor = 1e-12;
inline constexpr double kChargeFloor = 1e-17;

/// 1 - SS_res / SS_tot. Throws ConfigError on size mismatch, empty input or constant truth.
double r_squared(std::span<const double> pred, std::span<const double> truth);

/// mean(|p - t| / max(|t|, floor))
double mean_rel_error(std::span<const double> pred, std::span<const double> truth, double floor);

// ---------------------------------------------------------------------------
// Device-level comparison

struct DeviceErrorRow {
  BiasPoint bias;
  DeviceResponse ref;
  DeviceResponse pred;
};

struct DeviceErrorReport {
  double id_mre = 0.0;         // on |id_ref| > kAboveThreshold, floor kCurrentFloor
  std::size_t id_count = 0;    // points in that region
  double id_mre_full = 0.0;    // all points, floor kCurrentFloor
  double qg_mre = 0.0;         // floor kChargeFloor
  double qd_mre = 0.0;
  double id_r2 = 0.0;          // on asinh-transformed current
  std::vector<DeviceErrorRow> rows;
};

DeviceErrorReport compare_devices(const DeviceModel& ref, const DeviceModel& pred, std::span<const BiasPoint> biases,
                                  const TransformDescriptor& t = {});

/// vg, vd, vs, reference and predicted (id, qg, qd), relative errors.
void save_device_errors_csv(const DeviceErrorReport& r, const std::string& path);

// ---------------------------------------------------------------------------
// Learning curve

struct LearningPoint {
  std::size_t size = 0;
  double r2 = 0.0;         // transformed current on the test set
  double train_mse = 0.0;  // final training loss
  double seconds = 0.0;    // training wall time, not written to the CSV
};

/// Trains one net per size on a seeded subset of `pool` and scores it, wrapped as a
/// device (swap wrapper for canonical data), on `test`. Sizes must be strictly ascending.
/// When `nets` is given it receives the trained models.
std::vector<LearningPoint> learning_curve(const Dataset& pool, const std::vector<std::size_t>& sizes,
                                          const Dataset& test, const MLPSpec& spec, const TrainConfig& cfg,
                                          std::uint64_t subset_seed, std::vector<NetModel>* nets = nullptr);

void save_learning_csv(const std::vector<LearningPoint>& pts, const std::string& path);

// ---------------------------------------------------------------------------
// Circuits

/// n- and p-type evaluators for one technology. The p-type device is expected to
/// be mirrored about the circuit supply.
struct DevicePair {
  DeviceModelPtr n;
  DeviceModelPtr p;
};

/// Resolver mapping the model ids "nmod" / "pmod" to the pair.
ModelResolver pair_resolver(const DevicePair& d);

/// Sampled polyline in the (x, y) plane.
struct Curve {
  std::vector<double> x;
  std::vector<double> y;
};

/// Static noise margin of a butterfly plot. Both curves are given in the same
/// (v(Q), v(QB)) plane. Rotated by 45 degrees, each lobe's margin is its largest
/// diagonal separation / sqrt(2); the result is the smaller lobe, 0 when the curves
/// do not enclose two lobes.
double snm_extract(const Curve& c1, const Curve& c2);

enum class SramMode { Read, Hold };

struct ButterflyResult {
  Curve vtc1;  // Q forced, QB measured
  Curve vtc2;  // QB forced, Q measured (stored as (Q, QB) points)
  double snm = 0.0;
};

/// 6T cell with loop-breaking sweeps. Read: WL = BL = BLB = VDD. Hold: WL = 0.
ButterflyResult run_butterfly(const DevicePair& d, double vdd, SramMode mode, double step = 1e-3,
                              const SimOptions& opts = {});

struct NCurve {
  std::vector<double> v;  // probe voltage on Q
  std::vector<double> i;  // probe source current
  std::vector<double> crossings;
};

/// Intact read-mode cell, probe source swept on Q.
NCurve run_ncurve(const DevicePair& d, double vdd, double step = 1e-3, const SimOptions& opts = {});

/// Sign changes of y over x, located by linear interpolation. Exact zeros count once.
std::vector<double> zero_crossings(std::span<const double> x, std::span<const double> y);

/// Static inverter transfer curve (x = vin, y = vout).
Curve run_inverter(const DevicePair& d, double vdd, double step = 5e-3, const SimOptions& opts = {});

struct NandTiming {
  double vdd = 0.9;
  double t_start = 1e-9;  // Vin2 edge start
  double rise = 100e-12;
  double tstep = 1e-12;
  double tstop = 5e-9;
  double c_load = 1e-15;  // second-stage output
  bool ramp = true;       // false: Vin2 held low
};

struct NandResult {
  SimResult sim;  // time, v(out1), v(out2), v(in2), ...
  double glitch = 0.0;
  bool complete = true;  // false: a step failed, sim stops at the last good step
  std::string error;
};

/// Two cascaded 2-input NANDs. Stage 1: Vin1 = VDD, Vin2 ramps 0 -> VDD. Stage 2:
/// inputs out1 and VDD, loaded by c_load.
NandResult run_nand_transient(const DevicePair& d, const NandTiming& timing = {}, const SimOptions& opts = {});

/// Largest excursion of v against the direction of its overall transition,
/// measured from the value at t0, over samples with t0 <= t <= t1.
double glitch_amplitude(std::span<const double> t, std::span<const double> v, double t0, double t1);

struct TransferCurve {
  double vd = 0.0;
  std::vector<double> vg;
  std::vector<double> id_ref;
  std::vector<double> id_pred;
  double mre_above = 0.0;  // |id_ref| > kAboveThreshold
  double mre_full = 0.0;   // floor kCurrentFloor
  double max_jump_ref = 0.0;
  double max_jump_pred = 0.0;
};

std::vector<TransferCurve> transfer_curve_compare(const DeviceModel& ref, const DeviceModel& pred,
                                                  const std::vector<double>& vd_values, double vs, double vg_min,
                                                  double vg_max, double vg_step = 5e-3);

void save_transfer_csv(const std::vector<TransferCurve>& curves, const std::string& path);

/// Columns: sweep, then reference and surrogate curves side by side.
void save_curves_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& columns);

}  // namespace dtco::bench

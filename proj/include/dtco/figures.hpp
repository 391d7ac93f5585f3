#pragma once
// Figure-analog studies shared by the `dtco bench` command and the acceptance
// suite. Each study writes its CSV into `out_dir` (skipped when empty) and
// returns its scalar metrics.

#include <cstdint>
#include <memory>
#include <string>

#include <json.hpp>

#include "dtco/bench.hpp"
#include "dtco/mlp.hpp"
#include "dtco/refdev.hpp"
#include "dtco/surrogate.hpp"

namespace dtco::figures {

using Metrics = nlohmann::ordered_json;

inline constexpr double kFinfetVmax = 0.8;
inline constexpr double kTfetVmax = 0.9;
inline constexpr double kGridStep = 0.05;

/// Reference device for "nfinfet" / "ntfet"; ConfigError otherwise.
DeviceModelPtr reference_device(const std::string& name);
double device_vmax(const std::string& name);
/// Target scaling per device. The FinFET charges are an order of magnitude
/// smaller than the TFET's, so they get a smaller q_ref.
TransformDescriptor device_transform(const std::string& name);

/// Reference pair, p-type mirrored about vdd. `c_gd` overrides the TFET gate-drain capacitance.
bench::DevicePair finfet_ref_pair(double vdd = kFinfetVmax);
bench::DevicePair tfet_ref_pair(double vdd = kTfetVmax, double c_gd = RefTFETParams{}.c_gd);
bench::DevicePair surrogate_pair(const SurrogateDevice& n, double vdd);

/// Device-level error study on `count` seeded random biases (fig5 for the FinFET,
/// fig11 for the TFET).
Metrics device_errors(const std::string& device, const SurrogateDevice& nn, std::size_t count, std::uint64_t seed,
                      const std::string& out_dir);

/// SRAM read/hold butterfly curves and the read N-curve (FinFET).
Metrics sram(const SurrogateDevice& nn, const std::string& out_dir);

/// R2 of the transformed current vs training-set size (FinFET canonical grid).
Metrics learning(const MLPSpec& spec, const TrainConfig& cfg, std::uint64_t seed, const std::string& out_dir,
                 std::vector<NetModel>* nets = nullptr);

/// TFET transfer curves at vd = 50 mV and 0.9 V.
Metrics transfer(const SurrogateDevice& nn, const std::string& out_dir);

/// TFET inverter transfer characteristic.
Metrics inverter(const SurrogateDevice& nn, const std::string& out_dir);

/// TFET NAND chain: reference, c_gd = 0 ablation, surrogate.
Metrics nand(const SurrogateDevice& nn, const std::string& out_dir);

/// Reads `path` if it exists, sets `key`, writes it back.
void merge_metrics(const std::string& path, const std::string& key, const Metrics& m);

}  // namespace dtco::figures

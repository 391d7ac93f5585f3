#include "dtco/figures.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "dtco/error.hpp"

namespace dtco::figures {

namespace fs = std::filesystem;

namespace {

std::string out_file(const std::string& dir, const std::string& name) {
  if (dir.empty()) return {};
  fs::create_directories(dir);
  return (fs::path(dir) / name).string();
}

double rms_gap(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

// Distance from p to the polyline (xs, ys).
double polyline_distance(double px, double py, const std::vector<double>& xs, const std::vector<double>& ys) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    const double dx = xs[k + 1] - xs[k], dy = ys[k + 1] - ys[k];
    const double len2 = dx * dx + dy * dy;
    const double t = len2 > 0.0 ? std::clamp(((px - xs[k]) * dx + (py - ys[k]) * dy) / len2, 0.0, 1.0) : 0.0;
    best = std::min(best, std::hypot(px - xs[k] - t * dx, py - ys[k] - t * dy));
  }
  return best;
}

// RMS of nearest-point distances between two curves, both directions pooled.
// Unlike a vertical gap it does not blow up where a transfer curve is near vertical.
double rms_curve_distance(const bench::Curve& a, const bench::Curve& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.x.size(); ++k) s += std::pow(polyline_distance(a.x[k], a.y[k], b.x, b.y), 2);
  for (std::size_t k = 0; k < b.x.size(); ++k) s += std::pow(polyline_distance(b.x[k], b.y[k], a.x, a.y), 2);
  return std::sqrt(s / static_cast<double>(a.x.size() + b.x.size()));
}

double max_gap(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace

DeviceModelPtr reference_device(const std::string& name) {
  if (name == "nfinfet") return std::make_shared<RefFinFET>();
  if (name == "ntfet") return std::make_shared<RefTFET>();
  throw ConfigError("unknown device '" + name + "' (expected nfinfet or ntfet)");
}

double device_vmax(const std::string& name) {
  if (name == "nfinfet") return kFinfetVmax;
  if (name == "ntfet") return kTfetVmax;
  throw ConfigError("unknown device '" + name + "' (expected nfinfet or ntfet)");
}

TransformDescriptor device_transform(const std::string& name) {
  if (name == "nfinfet") return {1e-9, 1e-17};
  if (name == "ntfet") return {1e-9, 1e-15};
  throw ConfigError("unknown device '" + name + "' (expected nfinfet or ntfet)");
}

bench::DevicePair finfet_ref_pair(double vdd) {
  auto n = std::make_shared<RefFinFET>();
  return {n, mirror_p(n, vdd)};
}

bench::DevicePair tfet_ref_pair(double vdd, double c_gd) {
  RefTFETParams p;
  p.c_gd = c_gd;
  auto n = std::make_shared<RefTFET>(p, true);
  return {n, mirror_p(n, vdd)};
}

bench::DevicePair surrogate_pair(const SurrogateDevice& n, double vdd) {
  return {std::make_shared<SurrogateDevice>(n.with_polarity(Polarity::N)),
          std::make_shared<SurrogateDevice>(n.with_polarity(Polarity::P, vdd))};
}

Metrics device_errors(const std::string& device, const SurrogateDevice& nn, std::size_t count, std::uint64_t seed,
                      const std::string& out_dir) {
  const auto ref = reference_device(device);
  const Dataset test = sample_random(*ref, 0.0, device_vmax(device), count, seed);
  std::vector<BiasPoint> biases;
  biases.reserve(test.size());
  for (const auto& s : test.samples) biases.push_back(s.bias);
  const auto rep = bench::compare_devices(*ref, nn, biases, nn.primary_net().transform);
  const std::string path = out_file(out_dir, device == "nfinfet" ? "fig5_errors.csv" : "fig11_scatter.csv");
  if (!path.empty()) bench::save_device_errors_csv(rep, path);
  Metrics m;
  m["samples"] = count;
  m["seed"] = seed;
  m["id_mre_above_threshold"] = rep.id_mre;
  m["id_points_above_threshold"] = rep.id_count;
  m["id_mre_full"] = rep.id_mre_full;
  m["qg_mre"] = rep.qg_mre;
  m["qd_mre"] = rep.qd_mre;
  m["id_r2_transformed"] = rep.id_r2;
  return m;
}

Metrics sram(const SurrogateDevice& nn, const std::string& out_dir) {
  const double vdd = kFinfetVmax;
  const auto ref = finfet_ref_pair(vdd);
  const auto sur = surrogate_pair(nn, vdd);
  Metrics m;
  for (auto mode : {bench::SramMode::Read, bench::SramMode::Hold}) {
    const std::string tag = mode == bench::SramMode::Read ? "read" : "hold";
    const auto r = bench::run_butterfly(ref, vdd, mode);
    const auto s = bench::run_butterfly(sur, vdd, mode);
    const double vgap = std::sqrt(0.5 * (std::pow(rms_gap(r.vtc1.y, s.vtc1.y), 2) + std::pow(rms_gap(r.vtc2.x, s.vtc2.x), 2)));
    const double gap = std::sqrt(0.5 * (std::pow(rms_curve_distance(r.vtc1, s.vtc1), 2) + std::pow(rms_curve_distance(r.vtc2, s.vtc2), 2)));
    m[tag] = {{"snm_ref", r.snm}, {"snm_nn", s.snm}, {"snm_diff", std::abs(r.snm - s.snm)}, {"rms_gap", gap},
              {"rms_gap_vertical", vgap}};
    const std::string path = out_file(out_dir, "fig6_butterfly_" + tag + ".csv");
    if (!path.empty()) {
      bench::save_curves_csv(path, {"v_forced", "ref_vqb_q_forced", "ref_vq_qb_forced", "nn_vqb_q_forced", "nn_vq_qb_forced"},
                             {r.vtc1.x, r.vtc1.y, r.vtc2.x, s.vtc1.y, s.vtc2.x});
    }
  }
  const auto nr = bench::run_ncurve(ref, vdd);
  const auto ns = bench::run_ncurve(sur, vdd);
  Metrics nc;
  nc["crossings_ref"] = nr.crossings;
  nc["crossings_nn"] = ns.crossings;
  if (nr.crossings.size() == ns.crossings.size()) {
    nc["max_crossing_shift"] = max_gap(nr.crossings, ns.crossings);
  } else {
    nc["max_crossing_shift"] = nullptr;
  }
  m["ncurve"] = nc;
  const std::string path = out_file(out_dir, "fig6_ncurve.csv");
  if (!path.empty()) bench::save_curves_csv(path, {"v_probe", "i_ref", "i_nn"}, {nr.v, nr.i, ns.i});
  return m;
}

Metrics learning(const MLPSpec& spec, const TrainConfig& cfg, std::uint64_t seed, const std::string& out_dir,
                 std::vector<NetModel>* nets) {
  const RefFinFET dev;
  const auto t = device_transform("nfinfet");
  const Dataset pool = canonicalize_symmetric(generate_grid(dev, 0.0, kFinfetVmax, kGridStep, t));
  const Dataset test = sample_random(dev, 0.0, kFinfetVmax, 10000, seed, t);
  const std::vector<std::size_t> sizes{500, 1000, pool.size()};
  const auto pts = bench::learning_curve(pool, sizes, test, spec, cfg, seed, nets);
  const std::string path = out_file(out_dir, "fig10_learning.csv");
  if (!path.empty()) bench::save_learning_csv(pts, path);
  Metrics m;
  m["test_samples"] = test.size();
  m["architecture"] = spec.label();
  Metrics rows = Metrics::array();
  for (const auto& p : pts) rows.push_back({{"size", p.size}, {"r2", p.r2}, {"train_mse", p.train_mse}});
  m["points"] = rows;
  return m;
}

Metrics transfer(const SurrogateDevice& nn, const std::string& out_dir) {
  const RefTFET ref;
  const auto curves = bench::transfer_curve_compare(ref, nn, {0.05, 0.9}, 0.0, 0.0, kTfetVmax, 5e-3);
  const std::string path = out_file(out_dir, "fig13_transfer.csv");
  if (!path.empty()) bench::save_transfer_csv(curves, path);
  Metrics m = Metrics::array();
  for (const auto& c : curves) {
    m.push_back({{"vd", c.vd},
                 {"mre_above_threshold", c.mre_above},
                 {"mre_full", c.mre_full},
                 {"max_jump_ref", c.max_jump_ref},
                 {"max_jump_nn", c.max_jump_pred}});
  }
  return m;
}

Metrics inverter(const SurrogateDevice& nn, const std::string& out_dir) {
  const double vdd = kTfetVmax;
  const auto r = bench::run_inverter(tfet_ref_pair(vdd), vdd);
  const auto s = bench::run_inverter(surrogate_pair(nn, vdd), vdd);
  const std::string path = out_file(out_dir, "fig14_inverter.csv");
  if (!path.empty()) bench::save_curves_csv(path, {"vin", "vout_ref", "vout_nn"}, {r.x, r.y, s.y});
  return {{"vdd", vdd}, {"points", r.x.size()}, {"max_abs_dvout", max_gap(r.y, s.y)}};
}

Metrics nand(const SurrogateDevice& nn, const std::string& out_dir) {
  const bench::NandTiming tm;
  const auto ref = bench::run_nand_transient(tfet_ref_pair(tm.vdd), tm);
  const auto abl = bench::run_nand_transient(tfet_ref_pair(tm.vdd, 0.0), tm);
  if (!ref.complete || !abl.complete) throw SolverError("reference NAND: " + (ref.complete ? abl.error : ref.error));
  const auto sur = bench::run_nand_transient(surrogate_pair(nn, tm.vdd), tm);
  const std::string path = out_file(out_dir, "fig15_nand.csv");
  // An incomplete surrogate run leaves its columns short (empty cells).
  if (!path.empty()) {
    bench::save_curves_csv(path, {"time", "v_in2", "ref_out1", "ref_out2", "ablation_out1", "nn_out1", "nn_out2"},
                           {ref.sim.series("time"), ref.sim.series("v(in2)"), ref.sim.series("v(out1)"),
                            ref.sim.series("v(out2)"), abl.sim.series("v(out1)"), sur.sim.series("v(out1)"),
                            sur.sim.series("v(out2)")});
  }
  return {{"vdd", tm.vdd},
          {"glitch_ref", ref.glitch},
          {"glitch_ablation_cgd0", abl.glitch},
          {"glitch_nn", sur.glitch},
          {"glitch_ref_fraction_vdd", ref.glitch / tm.vdd},
          {"glitch_nn_rel_diff", std::abs(sur.glitch - ref.glitch) / ref.glitch},
          {"nn_complete", sur.complete},
          {"nn_error", sur.error},
          {"nn_last_time", sur.sim.rows.back().at(0)}};
}

void merge_metrics(const std::string& path, const std::string& key, const Metrics& m) {
  Metrics all = Metrics::object();
  if (fs::exists(path)) {
    std::ifstream in(path);
    try {
      all = Metrics::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw IoError("cannot parse " + path + ": " + e.what());
    }
  }
  all[key] = m;
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << all.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace dtco::figures

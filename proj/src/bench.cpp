#include "dtco/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "dtco/error.hpp"
#include "dtco/numeric.hpp"
#include "dtco/surrogate.hpp"

namespace dtco::bench {

double r_squared(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size() || truth.empty()) throw ConfigError("r_squared needs equal non-empty inputs");
  const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_res += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (ss_tot == 0.0) throw ConfigError("r_squared undefined for constant truth");
  return 1.0 - ss_res / ss_tot;
}

double mean_rel_error(std::span<const double> pred, std::span<const double> truth, double floor) {
  if (pred.size() != truth.size()) throw ConfigError("mean_rel_error needs equal-length inputs");
  if (!(floor > 0.0)) throw ConfigError("mean_rel_error floor must be positive");
  if (truth.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) sum += std::abs(pred[i] - truth[i]) / std::max(std::abs(truth[i]), floor);
  return sum / static_cast<double>(truth.size());
}

// ---------------------------------------------------------------------------

DeviceErrorReport compare_devices(const DeviceModel& ref, const DeviceModel& pred, std::span<const BiasPoint> biases,
                                  const TransformDescriptor& t) {
  DeviceErrorReport rep;
  std::vector<double> id_r, id_p, id_r_above, id_p_above, qg_r, qg_p, qd_r, qd_p, y_r, y_p;
  for (const auto& b : biases) {
    DeviceErrorRow row{b, ref.eval(b), pred.eval(b)};
    id_r.push_back(row.ref.id);
    id_p.push_back(row.pred.id);
    if (std::abs(row.ref.id) > kAboveThreshold) {
      id_r_above.push_back(row.ref.id);
      id_p_above.push_back(row.pred.id);
    }
    qg_r.push_back(row.ref.qg);
    qg_p.push_back(row.pred.qg);
    qd_r.push_back(row.ref.qd);
    qd_p.push_back(row.pred.qd);
    y_r.push_back(std::asinh(row.ref.id / t.i_ref));
    y_p.push_back(std::asinh(row.pred.id / t.i_ref));
    rep.rows.push_back(row);
  }
  rep.id_count = id_r_above.size();
  rep.id_mre = mean_rel_error(id_p_above, id_r_above, kCurrentFloor);
  rep.id_mre_full = mean_rel_error(id_p, id_r, kCurrentFloor);
  rep.qg_mre = mean_rel_error(qg_p, qg_r, kChargeFloor);
  rep.qd_mre = mean_rel_error(qd_p, qd_r, kChargeFloor);
  rep.id_r2 = r_squared(y_p, y_r);
  return rep;
}

void save_device_errors_csv(const DeviceErrorReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "vg,vd,vs,id_ref,id_pred,qg_ref,qg_pred,qd_ref,qd_pred,id_rel_err,qg_rel_err,qd_rel_err\n";
  auto rel = [](double p, double t, double floor) { return std::abs(p - t) / std::max(std::abs(t), floor); };
  for (const auto& row : r.rows) {
    out << fmt17(row.bias.vg) << ',' << fmt17(row.bias.vd) << ',' << fmt17(row.bias.vs) << ',' << fmt17(row.ref.id)
        << ',' << fmt17(row.pred.id) << ',' << fmt17(row.ref.qg) << ',' << fmt17(row.pred.qg) << ','
        << fmt17(row.ref.qd) << ',' << fmt17(row.pred.qd) << ',' << fmt17(rel(row.pred.id, row.ref.id, kCurrentFloor))
        << ',' << fmt17(rel(row.pred.qg, row.ref.qg, kChargeFloor)) << ','
        << fmt17(rel(row.pred.qd, row.ref.qd, kChargeFloor)) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------

std::vector<LearningPoint> learning_curve(const Dataset& pool, const std::vector<std::size_t>& sizes,
                                          const Dataset& test, const MLPSpec& spec, const TrainConfig& cfg,
                                          std::uint64_t subset_seed, std::vector<NetModel>* nets) {
  if (sizes.empty()) throw ConfigError("learning curve needs at least one size");
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (sizes[k] == 0 || sizes[k] > pool.size()) throw ConfigError("learning curve size out of range");
    if (k > 0 && sizes[k] <= sizes[k - 1]) throw ConfigError("learning curve sizes must be strictly ascending");
  }
  if (test.empty()) throw ConfigError("learning curve needs a test set");

  std::vector<double> truth;
  for (const auto& s : test.samples) truth.push_back(s.targets[0]);

  std::vector<LearningPoint> out;
  for (std::size_t n : sizes) {
    const Dataset sub = subsample(pool, n, subset_seed);
    const auto t0 = std::chrono::steady_clock::now();
    const TrainResult r = train(init_mlp(spec, cfg.seed), sub, cfg);
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    NetModel net{r.params, sub.transform, sub.input_norm, sub.region, Polarity::N};
    const SurrogateDevice dev =
        sub.region == RegionTag::SymmetricCanonical ? SurrogateDevice::symmetric(net) : SurrogateDevice::plain(net);
    std::vector<double> pred;
    for (const auto& s : test.samples) pred.push_back(std::asinh(dev.eval(s.bias).id / test.transform.i_ref));
    out.push_back({n, r_squared(pred, truth), r.loss_history.back(), dt.count()});
    if (nets) nets->push_back(std::move(net));
  }
  return out;
}

void save_learning_csv(const std::vector<LearningPoint>& pts, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "size,r2,train_mse\n";
  for (const auto& p : pts) out << p.size << ',' << fmt17(p.r2) << ',' << fmt17(p.train_mse) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Circuits

ModelResolver pair_resolver(const DevicePair& d) {
  return [d](const ModelCard& card) -> DeviceModelPtr {
    if (card.id == "nmod") return d.n;
    if (card.id == "pmod") return d.p;
    throw ConfigError("no device bound to model '" + card.id + "'");
  };
}

namespace {

// Kinds are placeholders; pair_resolver binds the ids.
constexpr const char* kModelCards = ".model nmod nfin_ref\n.model pmod pfin_ref\n";

SimResult run_text(const std::string& text, const DevicePair& d, const SimOptions& opts) {
  const Netlist nl = parse_netlist(text);
  Simulator sim(nl, pair_resolver(d), opts);
  return sim.run(nl.analyses.at(0));
}

std::string sram_cell(double vdd, double vwl) {
  const std::string v = fmt17(vdd);
  return "vdd vdd 0 dc " + v + "\nvwl wl 0 dc " + fmt17(vwl) + "\nvbl bl 0 dc " + v + "\nvblb blb 0 dc " + v +
         "\n"
         "mpu1 q qb vdd pmod\nmpd1 q qb 0 nmod\nmax1 bl wl q nmod\n"
         "mpu2 qb q vdd pmod\nmpd2 qb q 0 nmod\nmax2 blb wl qb nmod\n";
}

struct Rotated {
  std::vector<double> u, v;
};

Rotated rotate(const Curve& c) {
  if (c.x.size() != c.y.size() || c.x.size() < 2) throw ConfigError("butterfly curve needs at least two points");
  std::vector<std::size_t> order(c.x.size());
  std::iota(order.begin(), order.end(), 0);
  const double s = 1.0 / std::sqrt(2.0);
  std::vector<double> u(c.x.size()), v(c.x.size());
  for (std::size_t i = 0; i < c.x.size(); ++i) {
    u[i] = (c.x[i] - c.y[i]) * s;
    v[i] = (c.x[i] + c.y[i]) * s;
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return u[a] < u[b]; });
  Rotated r;
  for (std::size_t i : order) {
    r.u.push_back(u[i]);
    r.v.push_back(v[i]);
  }
  return r;
}

double interp(const Rotated& r, double u) {
  const auto it = std::lower_bound(r.u.begin(), r.u.end(), u);
  if (it == r.u.begin()) return r.v.front();
  if (it == r.u.end()) return r.v.back();
  const std::size_t k = static_cast<std::size_t>(it - r.u.begin());
  const double du = r.u[k] - r.u[k - 1];
  if (du <= 0.0) return r.v[k];
  return r.v[k - 1] + (r.v[k] - r.v[k - 1]) * (u - r.u[k - 1]) / du;
}

}  // namespace

double snm_extract(const Curve& c1, const Curve& c2) {
  const Rotated a = rotate(c1), b = rotate(c2);
  const double lo = std::max(a.u.front(), b.u.front());
  const double hi = std::min(a.u.back(), b.u.back());
  if (!(hi > lo)) return 0.0;
  std::vector<double> us;
  for (const auto* r : {&a, &b})
    for (double u : r->u)
      if (u >= lo && u <= hi) us.push_back(u);
  double pos = 0.0, neg = 0.0;
  for (double u : us) {
    const double d = interp(a, u) - interp(b, u);
    pos = std::max(pos, d);
    neg = std::max(neg, -d);
  }
  return std::min(pos, neg) / std::sqrt(2.0);
}

ButterflyResult run_butterfly(const DevicePair& d, double vdd, SramMode mode, double step, const SimOptions& opts) {
  const std::string cell = sram_cell(vdd, mode == SramMode::Read ? vdd : 0.0);
  const std::string sweep = fmt17(vdd) + " " + fmt17(step) + "\n.end\n";
  const auto r1 = run_text(cell + "vforce q 0 dc 0\n" + kModelCards + ".dc vforce 0 " + sweep, d, opts);
  const auto r2 = run_text(cell + "vforce qb 0 dc 0\n" + kModelCards + ".dc vforce 0 " + sweep, d, opts);
  ButterflyResult res;
  res.vtc1 = {r1.series("vforce"), r1.series("v(qb)")};
  res.vtc2 = {r2.series("v(q)"), r2.series("vforce")};
  res.snm = snm_extract(res.vtc1, res.vtc2);
  return res;
}

std::vector<double> zero_crossings(std::span<const double> x, std::span<const double> y) {
  std::vector<double> out;
  long last = -1;
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (y[k] == 0.0) continue;
    if (last >= 0 && (y[k] > 0.0) != (y[static_cast<std::size_t>(last)] > 0.0)) {
      const auto j = static_cast<std::size_t>(last);
      if (k == j + 1) {
        out.push_back(x[j] - y[j] * (x[k] - x[j]) / (y[k] - y[j]));
      } else {
        out.push_back(0.5 * (x[j + 1] + x[k - 1]));
      }
    }
    last = static_cast<long>(k);
  }
  return out;
}

NCurve run_ncurve(const DevicePair& d, double vdd, double step, const SimOptions& opts) {
  const auto r = run_text(sram_cell(vdd, vdd) + "vprobe q 0 dc 0\n" + kModelCards + ".dc vprobe 0 " + fmt17(vdd) +
                              " " + fmt17(step) + "\n.end\n",
                          d, opts);
  NCurve n{r.series("vprobe"), r.series("i(vprobe)"), {}};
  n.crossings = zero_crossings(n.v, n.i);
  return n;
}

Curve run_inverter(const DevicePair& d, double vdd, double step, const SimOptions& opts) {
  const auto r = run_text("vdd vdd 0 dc " + fmt17(vdd) + "\nvin in 0 dc 0\nmn out in 0 nmod\nmp out in vdd pmod\n" +
                              kModelCards + ".dc vin 0 " + fmt17(vdd) + " " + fmt17(step) + "\n.end\n",
                          d, opts);
  return {r.series("vin"), r.series("v(out)")};
}

double glitch_amplitude(std::span<const double> t, std::span<const double> v, double t0, double t1) {
  if (t.size() != v.size() || t.empty()) throw ConfigError("glitch_amplitude needs equal non-empty series");
  std::size_t k0 = 0;
  while (k0 + 1 < t.size() && t[k0 + 1] <= t0) ++k0;
  const double v0 = v[k0];
  const double dir = v.back() > v0 ? 1.0 : v.back() < v0 ? -1.0 : 0.0;
  double worst = 0.0;
  for (std::size_t k = k0; k < t.size() && t[k] <= t1; ++k) {
    const double dev = v[k] - v0;
    worst = std::max(worst, dir == 0.0 ? std::abs(dev) : -dir * dev);
  }
  return worst;
}

NandResult run_nand_transient(const DevicePair& d, const NandTiming& tm, const SimOptions& opts) {
  const std::string v = fmt17(tm.vdd);
  std::string in2 = tm.ramp ? "vin2 in2 0 pwl 0 0 " + fmt17(tm.t_start) + " 0 " + fmt17(tm.t_start + tm.rise) + " " + v
                            : std::string("vin2 in2 0 dc 0");
  const std::string text = "vdd vdd 0 dc " + v + "\nvin1 in1 0 dc " + v + "\n" + in2 +
                           "\n"
                           "mp1a out1 in1 vdd pmod\nmp1b out1 in2 vdd pmod\n"
                           "mn1b out1 in2 mid1 nmod\nmn1a mid1 in1 0 nmod\n"
                           "mp2a out2 out1 vdd pmod\nmp2b out2 vdd vdd pmod\n"
                           "mn2a out2 out1 mid2 nmod\nmn2b mid2 vdd 0 nmod\n"
                           "cload out2 0 " +
                           fmt17(tm.c_load) + "\n" + kModelCards + ".tran " + fmt17(tm.tstep) + " " + fmt17(tm.tstop) +
                           "\n.end\n";
  NandResult res;
  try {
    res.sim = run_text(text, d, opts);
  } catch (const TransientError& e) {
    if (e.partial.rows.size() < 2) throw;
    res.sim = e.partial;
    res.complete = false;
    res.error = e.what();
  }
  const auto t = res.sim.series("time"), out1 = res.sim.series("v(out1)");
  res.glitch = glitch_amplitude(t, out1, tm.t_start, tm.t_start + tm.rise);
  return res;
}

std::vector<TransferCurve> transfer_curve_compare(const DeviceModel& ref, const DeviceModel& pred,
                                                  const std::vector<double>& vd_values, double vs, double vg_min,
                                                  double vg_max, double vg_step) {
  if (!(vg_step > 0.0) || !(vg_max > vg_min)) throw ConfigError("transfer curve needs vg_min < vg_max and step > 0");
  const auto n = static_cast<std::size_t>(std::floor((vg_max - vg_min) / vg_step + 1e-9)) + 1;
  std::vector<TransferCurve> out;
  for (double vd : vd_values) {
    TransferCurve c;
    c.vd = vd;
    std::vector<double> above_r, above_p;
    for (std::size_t k = 0; k < n; ++k) {
      const double vg = vg_min + static_cast<double>(k) * vg_step;
      c.vg.push_back(vg);
      c.id_ref.push_back(ref.eval({vg, vd, vs}).id);
      c.id_pred.push_back(pred.eval({vg, vd, vs}).id);
      if (std::abs(c.id_ref.back()) > kAboveThreshold) {
        above_r.push_back(c.id_ref.back());
        above_p.push_back(c.id_pred.back());
      }
      if (k > 0) {
        c.max_jump_ref = std::max(c.max_jump_ref, std::abs(c.id_ref[k] - c.id_ref[k - 1]));
        c.max_jump_pred = std::max(c.max_jump_pred, std::abs(c.id_pred[k] - c.id_pred[k - 1]));
      }
    }
    c.mre_above = mean_rel_error(above_p, above_r, kCurrentFloor);
    c.mre_full = mean_rel_error(c.id_pred, c.id_ref, kCurrentFloor);
    out.push_back(std::move(c));
  }
  return out;
}

void save_transfer_csv(const std::vector<TransferCurve>& curves, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "vd,vg,id_ref,id_pred\n";
  for (const auto& c : curves)
    for (std::size_t k = 0; k < c.vg.size(); ++k)
      out << fmt17(c.vd) << ',' << fmt17(c.vg[k]) << ',' << fmt17(c.id_ref[k]) << ',' << fmt17(c.id_pred[k]) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

void save_curves_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& columns) {
  if (header.size() != columns.size() || columns.empty()) throw ConfigError("curve table shape mismatch");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  std::size_t rows = 0;
  for (const auto& col : columns) rows = std::max(rows, col.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out << ',';
      if (r < columns[c].size()) out << fmt17(columns[c][r]);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace dtco::bench

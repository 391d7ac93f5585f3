// End-to-end acceptance run. Trains the surrogates with the default settings,
// runs every study and prints one PASS/FAIL line per criterion.
//
//   acceptance <path-to-dtco-binary> [artifact-dir]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../unit/fd_check.hpp"
#include "dtco/bench.hpp"
#include "dtco/dataset.hpp"
#include "dtco/figures.hpp"
#include "dtco/mlp.hpp"
#include "dtco/numeric.hpp"
#include "dtco/refdev.hpp"
#include "dtco/simulator.hpp"
#include "dtco/surrogate.hpp"

using namespace dtco;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr std::uint64_t kSeed = 42;

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << "  [" << id << "] " << name << ": " << detail << std::endl;
  if (!ok) ++failures;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Seeded 80/20 split.
std::pair<Dataset, Dataset> holdout_split(const Dataset& ds, std::uint64_t seed) {
  const Dataset sh = subsample(ds, ds.size(), seed);
  Dataset tr = sh, te = sh;
  const auto n = static_cast<long>(ds.size() * 4 / 5);
  tr.samples.assign(sh.samples.begin(), sh.samples.begin() + n);
  te.samples.assign(sh.samples.begin() + n, sh.samples.end());
  return {tr, te};
}

NetModel fit(const Dataset& ds) {
  TrainConfig cfg;
  cfg.seed = kSeed;
  const auto r = train(init_mlp(MLPSpec::hidden(2, 32), kSeed), ds, cfg);
  return {r.params, ds.transform, ds.input_norm, ds.region, Polarity::N};
}

// R2 of one net's transformed current on a dataset.
double net_r2(const NetModel& net, const Dataset& ds) {
  std::vector<double> pred, truth;
  for (const auto& s : ds.samples) {
    Vec3 y;
    SurrogateDevice::net_physical(net, s.bias, y, nullptr);
    pred.push_back(std::asinh(y[0] / ds.transform.i_ref));
    truth.push_back(s.targets[0]);
  }
  return bench::r_squared(pred, truth);
}

BiasPoint random_bias(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 0.9);
  const double vg = u(gen), vd = u(gen), vs = u(gen);
  return {vg, vd, vs};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

SimResult run_netlist(const std::string& text) {
  const Netlist nl = parse_netlist(text);
  Simulator sim(nl, default_model_resolver("."));
  return sim.run(nl.analyses.at(0));
}

// ---------------------------------------------------------------------------

struct Models {
  SurrogateDevice finfet;
  SurrogateDevice tfet;
};

Models criteria_1_2(const fs::path& art) {
  const RefFinFET ref;
  const auto tr = figures::device_transform("nfinfet");
  const Dataset pool = canonicalize_symmetric(generate_grid(ref, 0.0, figures::kFinfetVmax, figures::kGridStep, tr));
  const Dataset test = sample_random(ref, 0.0, figures::kFinfetVmax, 10000, kSeed, tr);
  TrainConfig cfg;
  cfg.seed = kSeed;
  std::vector<NetModel> nets;
  const auto pts = bench::learning_curve(pool, {500, 1000, pool.size()}, test, MLPSpec::hidden(2, 32), cfg, kSeed, &nets);
  bench::save_learning_csv(pts, (art / "fig10_learning.csv").string());

  // Criterion 1 uses the net trained on the full canonical grid.
  const auto fin = SurrogateDevice::symmetric(nets.back());
  save_model(nets.back(), (art / "nfinfet.json").string());
  const auto t0 = Clock::now();
  const figures::Metrics em = figures::device_errors("nfinfet", fin, 50000, kSeed, art.string());
  const double wall = pts.back().seconds + seconds_since(t0);
  figures::merge_metrics((art / "metrics.json").string(), "fig5", em);

  const double id = em["id_mre_above_threshold"], qg = em["qg_mre"], qd = em["qd_mre"];
  report(1, "FinFET device accuracy", pool.size() == 2601 && id < 0.05 && qg < 0.02 && qd < 0.02 && wall < 600.0,
         std::to_string(pool.size()) + " samples; id MRE " + num(100 * id) + "% (<5%), qg " + num(100 * qg) + "%, qd " +
             num(100 * qd) + "% (<2%), train+eval " + num(wall) + " s (<600)");

  bool increasing = true;
  std::string r2s;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    increasing = increasing && (k == 0 || pts[k].r2 > pts[k - 1].r2);
    r2s += (k ? ", " : "") + std::to_string(pts[k].size) + ": " + num(pts[k].r2);
  }
  report(2, "learning curve", increasing && pts.back().r2 > 0.99,
         "R2 {" + r2s + "} on 10k test biases (strictly increasing, final > 0.99)");
  return {fin, fin};
}

SurrogateDevice criterion_3(const fs::path& art) {
  const auto tr = figures::device_transform("ntfet");
  const RefTFET ref;
  const auto [fwd, rev] = split_regions_tfet(generate_grid(ref, 0.0, figures::kTfetVmax, figures::kGridStep, tr));

  // Held-out score: nets trained on 80% of each region's grid, scored on the rest.
  const auto [fwd_tr, fwd_te] = holdout_split(fwd, kSeed);
  const auto [rev_tr, rev_te] = holdout_split(rev, kSeed);
  const double r2f = net_r2(fit(fwd_tr), fwd_te);
  const double r2r = net_r2(fit(rev_tr), rev_te);

  // Circuit models use the full grids.
  const NetModel nf = fit(fwd), nr = fit(rev);
  save_two_region(nf, nr, SurrogateDevice::kDefaultBlendHalfwidth, (art / "ntfet.json").string());
  const auto dev = SurrogateDevice::two_region(nf, nr);

  // Off-grid view, for the record: random biases split by region.
  const Dataset rnd = sample_random(ref, 0.0, figures::kTfetVmax, 10000, kSeed + 1, tr);
  Dataset rf = rnd, rr = rnd;
  rf.samples.clear();
  rr.samples.clear();
  for (const auto& s : rnd.samples) (s.bias.vd >= s.bias.vs ? rf : rr).samples.push_back(s);
  const double off_f = net_r2(nf, rf), off_r = net_r2(nr, rr);

  const double i0 = dev.eval({0.0, 0.0, 0.9}).id, i9 = dev.eval({0.9, 0.0, 0.9}).id;
  const double gate_dep = std::abs(i0 - i9) / std::max(std::abs(i0), std::abs(i9));
  figures::merge_metrics((art / "metrics.json").string(), "tfet_training",
                         {{"holdout_r2_fwd", r2f},
                          {"holdout_r2_rev", r2r},
                          {"offgrid_r2_fwd", off_f},
                          {"offgrid_r2_rev", off_r},
                          {"reverse_id_vg0", i0},
                          {"reverse_id_vg09", i9}});
  report(3, "TFET two-region training", r2f > 0.99 && r2r > 0.99 && gate_dep < 0.05,
         "held-out R2 fwd " + num(r2f) + " rev " + num(r2r) + " (>0.99; off-grid random " + num(off_f) + " / " +
             num(off_r) + "), reverse gate dependence " + num(100 * gate_dep) + "% (<5%)");
  return dev;
}

void criterion_4(const SurrogateDevice& tfet, const fs::path& art) {
  const figures::Metrics m = figures::transfer(tfet, art.string());
  figures::merge_metrics((art / "metrics.json").string(), "fig13", m);
  bool ok = true;
  std::string d;
  for (const auto& c : m) {
    const double mre = c["mre_above_threshold"], jr = c["max_jump_ref"], jn = c["max_jump_nn"];
    ok = ok && mre < 0.05 && jn < 2.0 * jr;
    d += "vd=" + num(c["vd"]) + ": MRE " + num(100 * mre) + "%, jump " + num(jn / jr) + "x ref; ";
  }
  report(4, "TFET transfer curves", ok, d + "(<5%, <2x)");
}

void criterion_5(const Models& m) {
  const auto fin_ref = std::make_shared<RefFinFET>();
  const auto tfet_ref = std::make_shared<RefTFET>();
  const auto fin_sur = std::make_shared<SurrogateDevice>(m.finfet);
  const auto tfet_sur = std::make_shared<SurrogateDevice>(m.tfet);
  std::vector<DeviceModelPtr> all{fin_ref, tfet_ref, fin_sur, tfet_sur};
  std::vector<std::pair<DeviceModelPtr, DeviceModelPtr>> mirrors;
  for (const auto& n : std::vector<DeviceModelPtr>{fin_ref, tfet_ref}) {
    const auto p = mirror_p(n, 0.9);
    all.push_back(p);
    mirrors.emplace_back(n, p);
  }
  for (const auto& n : {fin_sur, tfet_sur}) {
    const auto p = std::make_shared<SurrogateDevice>(n->with_polarity(Polarity::P, 0.9));
    all.push_back(p);
    mirrors.emplace_back(n, p);
  }
  long bad = 0;
  std::mt19937_64 gen(kSeed);
  for (int i = 0; i < 10000; ++i) {
    const BiasPoint b = random_bias(gen);
    for (const auto& d : all) {
      const auto r = d->eval(b);
      bad += !(r.ig == 0.0) + !(r.is == -r.id) + !(r.qg + r.qd + r.qs == 0.0);
    }
    for (const DeviceModel* f : {static_cast<const DeviceModel*>(fin_ref.get()), static_cast<const DeviceModel*>(fin_sur.get())}) {
      bad += !(f->eval(b).id == -f->eval({b.vg, b.vs, b.vd}).id);
    }
    const BiasPoint mb{0.9 - b.vg, 0.9 - b.vd, 0.9 - b.vs};
    for (const auto& [n, p] : mirrors) {
      const auto rp = p->eval(b), rn = n->eval(mb);
      bad += !(rp.id == -rn.id) + !(rp.qg == -rn.qg) + !(rp.qd == -rn.qd);
    }
  }
  report(5, "exact structural identities", bad == 0,
         std::to_string(bad) + " violations over 10^4 biases x " + std::to_string(all.size()) +
             " devices (ig, is, charge sum, swap, mirror)");
}

void criterion_6(const Models& m) {
  const RefFinFET fin;
  const RefTFET tfet;
  const auto pfin = m.finfet.with_polarity(Polarity::P, 0.9);
  const auto ptfet = m.tfet.with_polarity(Polarity::P, 0.9);
  const std::vector<const DeviceModel*> devs{&fin, &tfet, &m.finfet, &m.tfet, &pfin, &ptfet};
  std::mt19937_64 gen(kSeed + 6);
  double worst = 0.0;
  int n = 0;
  while (n < 1000) {
    const BiasPoint b = random_bias(gen);
    if (std::abs(b.vd - b.vs) <= 2.5e-3) continue;
    ++n;
    for (const auto* d : devs) worst = std::max(worst, testing::jacobian_fd_error(*d, b, 1e-6));
  }
  report(6, "Jacobian vs finite differences", worst < 1e-5,
         "worst relative error " + num(worst) + " over 10^3 biases x 6 devices (<1e-5)");
}

void criterion_7(const Models& m, const fs::path& art) {
  const figures::Metrics inv = figures::inverter(m.tfet, art.string());
  const figures::Metrics sr = figures::sram(m.finfet, art.string());
  figures::merge_metrics((art / "metrics.json").string(), "fig14", inv);
  figures::merge_metrics((art / "metrics.json").string(), "fig6", sr);
  const double dv = inv["max_abs_dvout"];
  bool ok = dv < 0.01;
  std::string d = "inverter max|dVout| " + num(1e3 * dv) + " mV";
  for (const char* mode : {"read", "hold"}) {
    const double gap = sr[mode]["rms_gap"], ds = sr[mode]["snm_diff"];
    ok = ok && gap < 0.01 && ds < 0.005;
    d += std::string("; ") + mode + " SNM " + num(1e3 * sr[mode]["snm_ref"].get<double>()) + " mV, dSNM " +
         num(1e3 * ds) + " mV, RMS gap " + num(1e3 * gap) + " mV";
  }
  const auto& nc = sr["ncurve"];
  const std::size_t nref = nc["crossings_ref"].size();
  const bool shift_ok = !nc["max_crossing_shift"].is_null() && nc["max_crossing_shift"].get<double>() < 0.01;
  ok = ok && nref == 3 && shift_ok;
  d += "; N-curve crossings ref " + std::to_string(nref) + " nn " + std::to_string(nc["crossings_nn"].size()) +
       ", shift " + (nc["max_crossing_shift"].is_null() ? std::string("n/a") : num(1e3 * nc["max_crossing_shift"].get<double>()) + " mV");
  report(7, "DC circuit equivalence", ok, d);
}

void criterion_8(const Models& m, const fs::path& art) {
  const figures::Metrics r = figures::nand(m.tfet, art.string());
  figures::merge_metrics((art / "metrics.json").string(), "fig15", r);
  const double vdd = r["vdd"], g = r["glitch_ref"], a = r["glitch_ablation_cgd0"], rel = r["glitch_nn_rel_diff"];
  const bool done = r["nn_complete"];
  report(8, "NAND transient glitch", done && g > 0.05 * vdd && a < 0.005 * vdd && rel < 0.2,
         std::string(done ? "" : "surrogate run incomplete (" + r["nn_error"].get<std::string>() + "), ") + "reference " + num(1e3 * g) + " mV (>" + num(50 * vdd) + "), c_gd=0 " + num(1e3 * a) + " mV (<" +
             num(5 * vdd) + "), surrogate " + num(1e3 * r["glitch_nn"].get<double>()) + " mV, rel diff " +
             num(100 * rel) + "% (<20%)");
}

void criterion_9() {
  const auto div = run_netlist("V1 in 0 dc 1\nR1 in mid 1k\nR2 mid 0 3k\n.op\n.end\n");
  const double div_err = std::abs(div.at(0, "v(mid)") - 0.75);
  const int iters = div.newton_iterations.at(0);

  const double tau = 1e-9, h = tau / 100;
  const auto rc = run_netlist("V1 in 0 pwl 0 0 1e-15 1\nR1 in out 1k\nC1 out 0 1p\n.tran " + fmt17(h) + " " +
                              fmt17(5 * tau) + "\n.end\n");
  double v = 0.0, disc = 0.0, cont = 0.0;
  for (std::size_t k = 1; k < rc.rows.size(); ++k) {
    const double t = rc.at(k, "time"), y = rc.at(k, "v(out)");
    v = (v + h / tau) / (1.0 + h / tau);
    disc = std::max(disc, std::abs(y - v) / v);
    const double exact = 1.0 - std::exp(-t / tau);
    if (t >= tau) cont = std::max(cont, std::abs(y - exact) / exact);
  }

  const std::string body =
      "V1 vdd 0 dc 0.9\nV2 in 0 dc 0.45\nM1 out in 0 nt\nM2 out in vdd pt\nC1 out 0 1f\n"
      ".model nt ntfet_ref\n.model pt ptfet_ref vref=0.9\n";
  const auto op = run_netlist(body + ".op\n.end\n");
  const auto tr = run_netlist(body + ".tran 1p 200p\n.end\n");
  double drift = 0.0;
  for (std::size_t k = 0; k < tr.rows.size(); ++k) drift = std::max(drift, std::abs(tr.at(k, "v(out)") - op.at(0, "v(out)")));

  report(9, "solver sanity", div_err < 1e-12 && iters == 1 && disc < 1e-9 && cont < 0.01 && drift < 1e-6,
         "divider err " + num(div_err) + " V in " + std::to_string(iters) + " iteration(s); RC discrete " + num(disc) +
             ", continuous " + num(100 * cont) + "%; constant-source drift " + num(drift) + " V");
}

// Runs the CLI pipeline into `dir`. Returns false if any step fails.
bool pipeline(const std::string& cli, const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string d = dir.string();
  const std::string common = " --seed 7 --epochs 300 ";
  const std::vector<std::string> steps{
      "gen --device nfinfet --out " + d + "/data",
      "gen --device ntfet --out " + d + "/data",
      "train " + d + "/data/nfinfet_train.csv --out " + d + "/models/nfinfet.json",
      "train " + d + "/data/ntfet_fwd.csv " + d + "/data/ntfet_rev.csv --out " + d + "/models/ntfet.json",
      "eval " + d + "/models/nfinfet.json --device nfinfet --samples 5000 --out " + d + "/results",
      "eval " + d + "/models/ntfet.json --device ntfet --samples 5000 --out " + d + "/results",
      "bench all --samples 5000 --models " + d + "/models --out " + d + "/results",
  };
  for (const auto& s : steps) {
    const std::string cmd = "\"" + cli + "\" " + s + common + " > " + d + "/log.txt 2>&1";
    if (std::system(cmd.c_str()) != 0) {
      std::cerr << "pipeline step failed: " << s << "\n" << slurp(dir / "log.txt");
      return false;
    }
  }
  fs::remove(dir / "log.txt");
  return true;
}

void criterion_10(const std::string& cli, const fs::path& art) {
  const fs::path a = art / "determinism_run1", b = art / "determinism_run2";
  if (!pipeline(cli, a) || !pipeline(cli, b)) {
    report(10, "determinism", false, "pipeline failed");
    return;
  }
  std::size_t files = 0, differ = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++files;
    const fs::path other = b / fs::relative(e.path(), a);
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) {
      ++differ;
      std::cerr << "differs: " << fs::relative(e.path(), a).string() << "\n";
    }
  }
  std::size_t files_b = 0;
  for (const auto& e : fs::recursive_directory_iterator(b)) files_b += e.is_regular_file();
  report(10, "determinism", files > 0 && differ == 0 && files == files_b,
         std::to_string(files) + " artifacts from gen/train/eval/bench, " + std::to_string(differ) + " differ");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <dtco-binary> [artifact-dir]\n";
    return 2;
  }
  const std::string cli = fs::absolute(argv[1]).string();
  const fs::path art = argc > 2 ? fs::path(argv[2]) : fs::path("acceptance_artifacts");
  fs::create_directories(art);
  fs::remove(art / "metrics.json");
  try {
    Models m = criteria_1_2(art);
    m.tfet = criterion_3(art);
    criterion_4(m.tfet, art);
    criterion_5(m);
    criterion_6(m);
    criterion_7(m, art);
    criterion_8(m, art);
    criterion_9();
    criterion_10(cli, art);
  } catch (const std::exception& e) {
    std::cout << "FAIL  acceptance run aborted: " << e.what() << std::endl;
    return 1;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}

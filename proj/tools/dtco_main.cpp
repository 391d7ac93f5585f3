// dtco: generate device data, train surrogates, evaluate them, simulate netlists
// and run the benchmark circuits.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dtco/dataset.hpp"
#include "dtco/error.hpp"
#include "dtco/figures.hpp"
#include "dtco/mlp.hpp"
#include "dtco/netlist.hpp"
#include "dtco/simulator.hpp"
#include "dtco/surrogate.hpp"

namespace fs = std::filesystem;
using namespace dtco;

namespace {

struct Options {
  std::string device;
  std::string out;
  std::uint64_t seed = 42;
  int layers = 2;
  int neurons = 32;
  int epochs = 5000;
  double lr = 1e-3;
  int batch = 256;
  bool sweep = false;
  int jobs = 1;
  std::string models = "models";
  std::size_t samples = 50000;
  std::vector<std::string> inputs;
  std::vector<std::string> figures;
};

TrainConfig train_config(const Options& o) {
  TrainConfig cfg;
  cfg.learning_rate = o.lr;
  cfg.batch_size = o.batch;
  cfg.max_epochs = o.epochs;
  cfg.seed = o.seed;
  cfg.validate();
  return cfg;
}

std::string require_out(const Options& o, const char* what) {
  if (o.out.empty()) throw ConfigError(std::string("--out is required (") + what + ")");
  return o.out;
}

void cmd_gen(const Options& o) {
  const std::string dir = require_out(o, "output directory");
  fs::create_directories(dir);
  const auto dev = figures::reference_device(o.device);
  const double vmax = figures::device_vmax(o.device);
  const Dataset grid = generate_grid(*dev, 0.0, vmax, figures::kGridStep, figures::device_transform(o.device));
  if (o.device == "nfinfet") {
    const Dataset c = canonicalize_symmetric(grid);
    save_csv(c, (fs::path(dir) / "nfinfet_train.csv").string());
    std::cout << "nfinfet: " << grid.size() << " grid points, " << c.size() << " canonical samples\n";
  } else {
    const auto [fwd, rev] = split_regions_tfet(grid);
    save_csv(fwd, (fs::path(dir) / "ntfet_fwd.csv").string());
    save_csv(rev, (fs::path(dir) / "ntfet_rev.csv").string());
    std::cout << "ntfet: " << grid.size() << " grid points, fwd " << fwd.size() << ", rev " << rev.size() << "\n";
  }
}

NetModel train_one(const Dataset& ds, const Options& o) {
  const auto cfg = train_config(o);
  const auto r = train(init_mlp(MLPSpec::hidden(o.layers, o.neurons), o.seed), ds, cfg);
  std::cout << to_string(ds.region) << ": " << r.loss_history.size() << " epochs, final mse "
            << r.loss_history.back() << "\n";
  return {r.params, ds.transform, ds.input_norm, ds.region, Polarity::N};
}

void cmd_train(const Options& o) {
  const std::string out = require_out(o, "model file");
  if (o.inputs.empty() || o.inputs.size() > 2) throw ConfigError("train takes one dataset, or forward and reverse datasets");
  std::vector<Dataset> data;
  for (const auto& p : o.inputs) data.push_back(load_csv(p));
  if (const auto parent = fs::path(out).parent_path(); !parent.empty()) fs::create_directories(parent);

  if (o.sweep) {
    // Hold out a seeded 20% of the first dataset.
    const Dataset& all = data.front();
    const Dataset shuffled = subsample(all, all.size(), o.seed);
    Dataset tr = shuffled, held = shuffled;
    const std::size_t n_train = all.size() * 4 / 5;
    tr.samples.assign(shuffled.samples.begin(), shuffled.samples.begin() + static_cast<long>(n_train));
    held.samples.assign(shuffled.samples.begin() + static_cast<long>(n_train), shuffled.samples.end());
    std::vector<MLPSpec> specs;
    for (int n : {8, 16, 32, 64}) specs.push_back(MLPSpec::hidden(2, n));
    for (int l : {1, 2, 3, 4}) specs.push_back(MLPSpec::hidden(l, o.neurons));
    const auto rows = hyperparam_sweep(tr, held, specs, train_config(o), o.jobs);
    save_sweep_csv(rows, out);
    std::cout << "sweep of " << rows.size() << " architectures written to " << out << "\n";
    return;
  }

  if (data.size() == 1) {
    save_model(train_one(data[0], o), out);
  } else {
    if (data[0].region == RegionTag::TfetRev) std::swap(data[0], data[1]);
    const NetModel fwd = train_one(data[0], o);
    const NetModel rev = train_one(data[1], o);
    save_two_region(fwd, rev, SurrogateDevice::kDefaultBlendHalfwidth, out);
  }
  std::cout << "model written to " << out << "\n";
}

void cmd_eval(const Options& o) {
  const std::string dir = require_out(o, "output directory");
  if (o.inputs.size() != 1) throw ConfigError("eval takes one model file");
  const auto nn = load_surrogate(o.inputs[0]);
  const auto m = figures::device_errors(o.device, nn, o.samples, o.seed, dir);
  figures::merge_metrics((fs::path(dir) / "metrics.json").string(), "eval_" + o.device, m);
  std::cout << m.dump(2) << "\n";
}

void cmd_sim(const Options& o) {
  const std::string dir = require_out(o, "output directory");
  if (o.inputs.size() != 1) throw ConfigError("sim takes one netlist");
  const fs::path netlist(o.inputs[0]);
  const Netlist nl = parse_netlist_file(netlist.string());
  if (nl.analyses.empty()) throw ConfigError("netlist has no analysis card");
  Simulator sim(nl, default_model_resolver(netlist.parent_path().string()));
  fs::create_directories(dir);
  for (std::size_t k = 0; k < nl.analyses.size(); ++k) {
    const SimResult r = sim.run(nl.analyses[k]);
    const fs::path path = fs::path(dir) / (netlist.stem().string() + "_" + std::to_string(k) + "_" + r.analysis + ".csv");
    r.save_csv(path.string(), nl.prints);
    std::cout << path.string() << " (" << r.rows.size() << " rows)\n";
  }
}

void cmd_bench(const Options& o) {
  const std::string dir = require_out(o, "output directory");
  const std::vector<std::string> known{"fig5", "fig6", "fig10", "fig11", "fig13", "fig14", "fig15"};
  std::vector<std::string> figs = o.figures;
  if (figs.empty() || std::find(figs.begin(), figs.end(), "all") != figs.end()) figs = known;
  for (const auto& f : figs) {
    if (std::find(known.begin(), known.end(), f) == known.end()) throw ConfigError("unknown figure '" + f + "'");
  }
  const std::string metrics = (fs::path(dir) / "metrics.json").string();
  const fs::path models(o.models);
  auto finfet = [&] { return load_surrogate((models / "nfinfet.json").string()); };
  auto tfet = [&] { return load_surrogate((models / "ntfet.json").string()); };
  for (const auto& f : figs) {
    figures::Metrics m;
    if (f == "fig5") m = figures::device_errors("nfinfet", finfet(), o.samples, o.seed, dir);
    if (f == "fig6") m = figures::sram(finfet(), dir);
    if (f == "fig10") m = figures::learning(MLPSpec::hidden(o.layers, o.neurons), train_config(o), o.seed, dir);
    if (f == "fig11") m = figures::device_errors("ntfet", tfet(), o.samples, o.seed, dir);
    if (f == "fig13") m = figures::transfer(tfet(), dir);
    if (f == "fig14") m = figures::inverter(tfet(), dir);
    if (f == "fig15") m = figures::nand(tfet(), dir);
    figures::merge_metrics(metrics, f, m);
    std::cout << f << ": " << m.dump() << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ML-assisted DTCO flow: device data, surrogate training, circuit simulation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with option defaults");
  Options o;
  app.add_option("--device", o.device, "Device: nfinfet | ntfet")->check(CLI::IsMember({"nfinfet", "ntfet"}));
  app.add_option("--out", o.out, "Output directory (model file for train)");
  app.add_option("--seed", o.seed, "Random seed")->capture_default_str();
  app.add_option("--layers", o.layers, "Hidden layers")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--neurons", o.neurons, "Neurons per hidden layer")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--epochs", o.epochs, "Training epochs")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--lr", o.lr, "Adam learning rate")->capture_default_str();
  app.add_option("--batch", o.batch, "Mini-batch size")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_flag("--sweep", o.sweep, "Train: run the architecture sweep instead");
  app.add_option("--jobs", o.jobs, "Parallel sweep jobs")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--models", o.models, "Bench: directory with nfinfet.json and ntfet.json")->capture_default_str();
  app.add_option("--samples", o.samples, "Eval: random test biases")->capture_default_str()->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("gen", "Write training grids for a reference device")->fallthrough();
  auto* trn = app.add_subcommand("train", "Train a surrogate from one or two dataset CSVs")->fallthrough();
  trn->add_option("data", o.inputs, "Dataset CSV(s)")->required()->check(CLI::ExistingFile);
  auto* evl = app.add_subcommand("eval", "Compare a surrogate against its reference device")->fallthrough();
  evl->add_option("model", o.inputs, "Model file")->required()->check(CLI::ExistingFile);
  auto* sim = app.add_subcommand("sim", "Simulate a netlist")->fallthrough();
  sim->add_option("netlist", o.inputs, "Netlist file")->required()->check(CLI::ExistingFile);
  auto* bch = app.add_subcommand("bench", "Run figure-analog studies")->fallthrough();
  bch->add_option("figures", o.figures, "fig5 fig6 fig10 fig11 fig13 fig14 fig15 | all");

  CLI11_PARSE(app, argc, argv);

  try {
    if ((gen->parsed() || evl->parsed()) && o.device.empty()) throw ConfigError("--device is required");
    if (gen->parsed()) cmd_gen(o);
    if (trn->parsed()) cmd_train(o);
    if (evl->parsed()) cmd_eval(o);
    if (sim->parsed()) cmd_sim(o);
    if (bch->parsed()) cmd_bench(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#include "dtco/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <filesystem>
#include <map>
#include <fstream>

#include "dtco/error.hpp"
#include "dtco/numeric.hpp"
#include "dtco/refdev.hpp"
#include "dtco/surrogate.hpp"

namespace dtco {

void SimOptions::validate() const {
  if (!(abstol > 0) || !(reltol > 0) || !(vntol > 0) || max_newton_iters < 1 || !(gmin > 0) ||
      !(damping_clip > 0) || gmin_steps < 1 || source_steps < 1 || !(pt_cap > 0) || pt_max_steps < 1 || max_backtracks < 1) {
    throw ConfigError("simulator options must all be positive");
  }
}

// ---------------------------------------------------------------------------
// Model resolution

namespace {

RefFinFETParams finfet_params(const ModelCard& card) {
  RefFinFETParams p;
  for (const auto& [k, v] : card.params) {
    if (k == "vth") p.vth = v;
    else if (k == "n_slope") p.n_slope = v;
    else if (k == "vt_thermal") p.vt_thermal = v;
    else if (k == "i_spec") p.i_spec = v;
    else if (k == "c_gate") p.c_gate = v;
    else throw ConfigError("model '" + card.id + "': unknown FinFET parameter '" + k + "'");
  }
  return p;
}

RefTFETParams tfet_params(const ModelCard& card) {
  RefTFETParams p;
  for (const auto& [k, v] : card.params) {
    if (k == "a_kane") p.a_kane = v;
    else if (k == "b_kane") p.b_kane = v;
    else if (k == "vth_tun") p.vth_tun = v;
    else if (k == "i_diode") p.i_diode = v;
    else if (k == "n_diode") p.n_diode = v;
    else if (k == "c_gd") p.c_gd = v;
    else if (k == "c_gs") p.c_gs = v;
    else if (k == "vt_thermal") p.vt_thermal = v;
    else throw ConfigError("model '" + card.id + "': unknown TFET parameter '" + k + "'");
  }
  return p;
}

}  // namespace

ModelResolver default_model_resolver(const std::string& base_dir) {
  return [base_dir](const ModelCard& card) -> DeviceModelPtr {
    const bool p_kind = card.kind == "pfin_ref" || card.kind == "ptfet_ref";
    const bool want_p = card.polarity.empty() ? p_kind : card.polarity == "p";
    DeviceModelPtr n_type;
    if (card.kind == "nfin_ref" || card.kind == "pfin_ref") {
      n_type = std::make_shared<RefFinFET>(finfet_params(card));
    } else if (card.kind == "ntfet_ref" || card.kind == "ptfet_ref") {
      const bool ablation = card.params.count("c_gd") && card.params.at("c_gd") == 0.0;
      n_type = std::make_shared<RefTFET>(tfet_params(card), ablation);
    } else if (card.kind == "nn") {
      if (!card.params.empty()) throw ConfigError("model '" + card.id + "': nn models take no device parameters");
      std::filesystem::path path(card.file);
      if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
      SurrogateDevice dev = load_surrogate(path.string());
      const bool file_p = dev.polarity() == Polarity::P;
      const bool nn_p = card.polarity.empty() ? file_p : card.polarity == "p";
      if (nn_p) return std::make_shared<SurrogateDevice>(dev.with_polarity(Polarity::P, card.vref));
      return std::make_shared<SurrogateDevice>(std::move(dev));
    } else {
      throw ConfigError("unknown model kind '" + card.kind + "'");
    }
    if (want_p) return mirror_p(n_type, card.vref);
    return n_type;
  };
}

// ---------------------------------------------------------------------------
// SimResult

std::size_t SimResult::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw ConfigError("no result column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> SimResult::series(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

void SimResult::save_csv(const std::string& path, const std::vector<PrintItem>& items) const {
  std::vector<std::size_t> cols;
  if (analysis != "op" && !columns.empty()) cols.push_back(0);
  if (items.empty()) {
    for (std::size_t c = cols.size(); c < columns.size(); ++c) cols.push_back(c);
  } else {
    for (const auto& it : items) cols.push_back(column(it.label()));
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (std::size_t k = 0; k < cols.size(); ++k) out << (k ? "," : "") << columns[cols[k]];
  out << '\n';
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < cols.size(); ++k) out << (k ? "," : "") << fmt17(r[cols[k]]);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Simulator

Simulator::Simulator(const Netlist& nl, const ModelResolver& resolver, SimOptions opts) : opts_(opts) {
  opts_.validate();
  node_names_ = nl.nodes;
  num_nodes_ = nl.nodes.size();
  std::map<std::string, DeviceModelPtr> models;
  for (const auto& e : nl.elements) {
    std::vector<std::size_t> idx;
    for (const auto& n : e.nodes) idx.push_back(node_index(n));
    switch (e.kind) {
      case ElementKind::Resistor: resistors_.push_back({idx[0], idx[1], e.value}); break;
      case ElementKind::Capacitor: capacitors_.push_back({idx[0], idx[1], e.value}); break;
      case ElementKind::VSource: sources_.push_back({e.name, idx[0], idx[1], e.wave}); break;
      case ElementKind::Device3: {
        auto& m = models[e.model];
        if (!m) {
          m = resolver(nl.models.at(e.model));
          if (!m) throw ConfigError("model '" + e.model + "' could not be resolved");
        }
        devices_.push_back({idx[0], idx[1], idx[2], m});
        break;
      }
    }
  }
}

std::size_t Simulator::node_index(const std::string& name) const {
  const auto it = std::find(node_names_.begin(), node_names_.end(), name);
  if (it == node_names_.end()) throw ConfigError("unknown node '" + name + "'");
  return static_cast<std::size_t>(it - node_names_.begin());
}

double Simulator::source_value(std::size_t k, const Context& ctx) const {
  const double v = static_cast<int>(k) == ctx.override_source ? ctx.override_value : sources_[k].wave.at(ctx.time);
  return ctx.source_scale * v;
}

void Simulator::assemble(const std::vector<double>& x, const Context& ctx, std::vector<double>& f, DenseMatrix& jac,
                         std::vector<DeviceResponse>& resp) const {
  const std::size_t n = num_unknowns();
  f.assign(n, 0.0);
  if (jac.size() != n) jac = DenseMatrix(n);
  jac.zero();

  // Row/column of node k is k - 1; ground is dropped.
  auto add_f = [&](std::size_t node, double v) {
    if (node) f[node - 1] += v;
  };
  auto add_j = [&](std::size_t node, std::size_t col_node, double v) {
    if (node && col_node) jac(node - 1, col_node - 1) += v;
  };
  auto conductance = [&](std::size_t a, std::size_t b, double g) {
    const double i = g * (volt(x, a) - volt(x, b));
    add_f(a, i);
    add_f(b, -i);
    add_j(a, a, g);
    add_j(a, b, -g);
    add_j(b, a, -g);
    add_j(b, b, g);
  };

  for (const auto& r : resistors_) conductance(r.a, r.b, 1.0 / r.value);

  if (ctx.tstep > 0.0) {
    const auto& xp = *ctx.x_prev;
    for (const auto& c : capacitors_) {
      const double g = c.value / ctx.tstep;
      const double i = g * ((volt(x, c.a) - volt(x, c.b)) - (volt(xp, c.a) - volt(xp, c.b)));
      add_f(c.a, i);
      add_f(c.b, -i);
      add_j(c.a, c.a, g);
      add_j(c.a, c.b, -g);
      add_j(c.b, c.a, -g);
      add_j(c.b, c.b, g);
    }
  }

  if (ctx.pt_h > 0.0) {
    const double g = opts_.pt_cap / ctx.pt_h;
    for (std::size_t k = 1; k < num_nodes_; ++k) {
      add_f(k, g * (volt(x, k) - volt(*ctx.pt_prev, k)));
      add_j(k, k, g);
    }
  }

  const std::size_t vbase = num_nodes_ - 1;
  for (std::size_t k = 0; k < sources_.size(); ++k) {
    const auto& s = sources_[k];
    const std::size_t row = vbase + k;
    const double j = x[row];
    add_f(s.pos, j);
    add_f(s.neg, -j);
    if (s.pos) jac(s.pos - 1, row) += 1.0;
    if (s.neg) jac(s.neg - 1, row) -= 1.0;
    f[row] = volt(x, s.pos) - volt(x, s.neg) - source_value(k, ctx);
    if (s.pos) jac(row, s.pos - 1) += 1.0;
    if (s.neg) jac(row, s.neg - 1) -= 1.0;
  }

  resp.resize(devices_.size());
  DeviceJacobian dj;
  for (std::size_t k = 0; k < devices_.size(); ++k) {
    const auto& d = devices_[k];
    const BiasPoint b{volt(x, d.g), volt(x, d.d), volt(x, d.s)};
    d.model->eval_with_jacobian(b, resp[k], dj);
    const auto& r = resp[k];
    // Rows (id, ig, is) / (qg, qd, qs); columns (vg, vd, vs).
    const std::size_t term_i[3] = {d.d, d.g, d.s};
    const std::size_t term_q[3] = {d.g, d.d, d.s};
    const std::size_t col[3] = {d.g, d.d, d.s};
    const double cur[3] = {r.id, r.ig, r.is};
    for (int row = 0; row < 3; ++row) {
      add_f(term_i[row], cur[row]);
      for (int c = 0; c < 3; ++c) add_j(term_i[row], col[c], dj.di[row][c]);
    }
    if (ctx.tstep > 0.0) {
      const auto& qp = (*ctx.q_prev)[k];
      const double q[3] = {r.qg, r.qd, r.qs};
      const double q0[3] = {qp.qg, qp.qd, qp.qs};
      for (int row = 0; row < 3; ++row) {
        add_f(term_q[row], (q[row] - q0[row]) / ctx.tstep);
        for (int c = 0; c < 3; ++c) add_j(term_q[row], col[c], dj.dq[row][c] / ctx.tstep);
      }
    }
    conductance(d.d, d.s, opts_.gmin);
  }

  if (ctx.node_gmin > 0.0) {
    for (std::size_t node = 1; node < num_nodes_; ++node) conductance(node, 0, ctx.node_gmin);
  }
}

bool Simulator::newton(std::vector<double>& x, const Context& ctx, int& iterations,
                       std::vector<DeviceResponse>& resp) const {
  const std::size_t n = num_unknowns();
  const std::size_t nv = num_nodes_ - 1;
  std::vector<double> f, f_try, x_try(n);
  DenseMatrix jac(n), jac_try(n);
  bool small_step = false;
  bool have_next = false;  // f / jac / resp already hold the state x
  for (int it = 0;; ++it) {
    if (!have_next) assemble(x, ctx, f, jac, resp);
    have_next = false;
    double res = 0.0;
    for (std::size_t k = 0; k < nv; ++k) res = std::max(res, std::abs(f[k]));
    if (!std::isfinite(res)) return false;
    if (it > 0 && (small_step || is_linear()) && res < opts_.abstol) return true;
    if (it == opts_.max_newton_iters) return false;

    for (auto& v : f) v = -v;
    std::vector<double> dx;
    try {
      dx = LuFactor(jac).solve(f);
    } catch (const SolverError&) {
      return false;
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (!std::isfinite(dx[k])) return false;
      if (k < nv && !is_linear()) dx[k] = std::clamp(dx[k], -opts_.damping_clip, opts_.damping_clip);
    }
    // Backtracking: halve the step while the KCL residual grows. Breaks the
    // two-point cycles Newton can fall into across a kink in a device model.
    double alpha = 1.0;
    if (!is_linear()) {
      for (int half = 0; half < opts_.max_backtracks; ++half) {
        for (std::size_t k = 0; k < n; ++k) x_try[k] = x[k] + alpha * dx[k];
        assemble(x_try, ctx, f_try, jac_try, resp);
        double r_try = 0.0;
        for (std::size_t k = 0; k < nv; ++k) r_try = std::max(r_try, std::abs(f_try[k]));
        if (r_try < res || r_try < opts_.abstol) {
          have_next = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!have_next) alpha = 1.0;
    }
    small_step = true;
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * dx[k];
      const double tol = (k < nv ? opts_.vntol : opts_.abstol) + opts_.reltol * std::abs(x[k]);
      if (std::abs(alpha * dx[k]) > tol) small_step = false;
    }
    if (have_next) {
      std::swap(f, f_try);
      std::swap(jac, jac_try);
    }
    ++iterations;
  }
}

void Simulator::solve_op(std::vector<double>& x, Context ctx, int& iterations, std::vector<DeviceResponse>& resp) const {
  const std::vector<double> x0 = x;
  if (newton(x, ctx, iterations, resp)) return;

  // gmin stepping: shunt every node to ground, 1e-3 S down to gmin.
  x = x0;
  bool ok = true;
  for (int k = 0; k <= opts_.gmin_steps && ok; ++k) {
    ctx.node_gmin = 1e-3 * std::pow(opts_.gmin / 1e-3, static_cast<double>(k) / opts_.gmin_steps);
    ok = newton(x, ctx, iterations, resp);
  }
  ctx.node_gmin = 0.0;
  if (ok && newton(x, ctx, iterations, resp)) return;

  // Source stepping from the all-zero state.
  std::fill(x.begin(), x.end(), 0.0);
  ok = true;
  for (int k = 0; k <= opts_.source_steps && ok; ++k) {
    ctx.source_scale = static_cast<double>(k) / opts_.source_steps;
    ok = newton(x, ctx, iterations, resp);
  }
  ctx.source_scale = 1.0;
  if (ok) return;

  // Pseudo-transient continuation: integrate from the all-zero state with a
  // small capacitor on every node and a growing step, trying the plain DC
  // Newton from each accepted state. Keeps iterates on a physical trajectory
  // when Newton cycles between far-off points.
  std::fill(x.begin(), x.end(), 0.0);
  std::vector<double> prev = x;
  double h = 1e-13;
  for (int step = 0; step < opts_.pt_max_steps && h > 1e-20; ++step) {
    Context pt = ctx;
    pt.pt_h = h;
    pt.pt_prev = &prev;
    if (!newton(x, pt, iterations, resp)) {
      x = prev;
      h *= 0.25;
      continue;
    }
    double moved = 0.0;
    for (std::size_t k = 0; k + 1 < num_nodes_; ++k) moved = std::max(moved, std::abs(x[k] - prev[k]));
    std::vector<double> trial = x;
    int trial_iters = 0;
    if ((moved < 1e-2 || step % 10 == 9) && newton(trial, ctx, trial_iters, resp)) {
      iterations += trial_iters;
      x = trial;
      return;
    }
    prev = x;
    h *= 2.0;
  }
  throw SolverError("operating point did not converge (Newton, gmin stepping, source stepping and pseudo-transient failed)");
}

std::vector<std::string> Simulator::state_columns() const {
  std::vector<std::string> cols;
  for (std::size_t k = 1; k < num_nodes_; ++k) cols.push_back("v(" + node_names_[k] + ")");
  for (const auto& s : sources_) cols.push_back("i(" + s.name + ")");
  return cols;
}

std::vector<double> Simulator::state_row(const std::vector<double>& x) const { return x; }

SimResult Simulator::operating_point() {
  SimResult res;
  res.analysis = "op";
  res.columns = state_columns();
  std::vector<double> x(num_unknowns(), 0.0);
  std::vector<DeviceResponse> resp;
  int iters = 0;
  solve_op(x, Context{}, iters, resp);
  res.rows.push_back(state_row(x));
  res.newton_iterations.push_back(iters);
  return res;
}

SimResult Simulator::dc_sweep(const std::string& source, double start, double stop, double step) {
  if (!(step > 0.0)) throw ConfigError("dc sweep step must be positive");
  int k_src = -1;
  for (std::size_t k = 0; k < sources_.size(); ++k) {
    if (sources_[k].name == source) k_src = static_cast<int>(k);
  }
  if (k_src < 0) throw ConfigError("dc sweep: no source named '" + source + "'");

  const double span = stop - start;
  const double dir = span < 0 ? -1.0 : 1.0;
  const auto npts = static_cast<long>(std::floor(std::abs(span) / step + 1e-9)) + 1;

  SimResult res;
  res.analysis = "dc";
  res.columns = state_columns();
  res.columns.insert(res.columns.begin(), source);

  Context ctx;
  ctx.override_source = k_src;
  std::vector<double> x(num_unknowns(), 0.0);
  std::vector<DeviceResponse> resp;
  for (long i = 0; i < npts; ++i) {
    ctx.override_value = i + 1 == npts && std::abs(std::abs(span) - (npts - 1) * step) < 1e-9 * step
                             ? stop
                             : start + dir * static_cast<double>(i) * step;
    int iters = 0;
    try {
      const std::vector<double> warm = x;
      if (i == 0 || !newton(x, ctx, iters, resp)) {
        x = i == 0 ? std::vector<double>(num_unknowns(), 0.0) : warm;
        solve_op(x, ctx, iters, resp);
      }
    } catch (const SolverError& e) {
      throw SolverError("dc sweep at " + source + " = " + fmt17(ctx.override_value) + ": " + e.what());
    }
    auto row = state_row(x);
    row.insert(row.begin(), ctx.override_value);
    res.rows.push_back(std::move(row));
    res.newton_iterations.push_back(iters);
  }
  return res;
}

SimResult Simulator::transient(double tstep, double tstop) {
  if (!(tstep > 0.0) || !(tstop >= tstep)) throw ConfigError("transient needs 0 < tstep <= tstop");
  SimResult res;
  res.analysis = "tran";
  res.columns = state_columns();
  res.columns.insert(res.columns.begin(), "time");

  std::vector<double> x(num_unknowns(), 0.0);
  std::vector<DeviceResponse> resp;
  int iters = 0;
  try {
    solve_op(x, Context{}, iters, resp);
  } catch (const SolverError& e) {
    throw SolverError(std::string("transient initial operating point: ") + e.what());
  }
  auto row = state_row(x);
  row.insert(row.begin(), 0.0);
  res.rows.push_back(std::move(row));
  res.newton_iterations.push_back(iters);

  // One backward Euler step from (x, resp) at t0 to t0 + h. A step that does not
  // converge is retried as two half steps, down to h / 2^10.
  std::function<bool(double, double, int)> advance = [&](double t0, double h, int depth) -> bool {
    const std::vector<double> x_prev = x;
    const std::vector<DeviceResponse> q_prev = resp;
    Context ctx;
    ctx.time = t0 + h;
    ctx.tstep = h;
    ctx.x_prev = &x_prev;
    ctx.q_prev = &q_prev;
    if (newton(x, ctx, iters, resp)) return true;
    x = x_prev;
    resp = q_prev;
    if (depth == 10) return false;
    return advance(t0, 0.5 * h, depth + 1) && advance(t0 + 0.5 * h, 0.5 * h, depth + 1);
  };

  const auto steps = static_cast<long>(std::floor(tstop / tstep + 1e-9));
  for (long k = 1; k <= steps; ++k) {
    const double t = static_cast<double>(k) * tstep;
    iters = 0;
    if (!advance(static_cast<double>(k - 1) * tstep, tstep, 0)) {
      throw TransientError("transient step did not converge at t = " + fmt17(t), std::move(res), t);
    }
    auto r = state_row(x);
    r.insert(r.begin(), t);
    res.rows.push_back(std::move(r));
    res.newton_iterations.push_back(iters);
  }
  return res;
}

SimResult Simulator::run(const Analysis& a) {
  switch (a.kind) {
    case Analysis::Kind::Op: return operating_point();
    case Analysis::Kind::Dc: return dc_sweep(a.source, a.start, a.stop, a.step);
    case Analysis::Kind::Tran: return transient(a.tstep, a.tstop);
  }
  throw ConfigError("unknown analysis");
}

void Simulator::residual(const std::vector<double>& x, std::vector<double>& f, DenseMatrix& jac) {
  std::vector<DeviceResponse> resp;
  assemble(x, Context{}, f, jac, resp);
}

std::vector<SimResult> simulate(const Netlist& nl, const ModelResolver& resolver, const SimOptions& opts) {
  Simulator sim(nl, resolver, opts);
  std::vector<SimResult> out;
  for (const auto& a : nl.analyses) out.push_back(sim.run(a));
  return out;
}

}  // namespace dtco

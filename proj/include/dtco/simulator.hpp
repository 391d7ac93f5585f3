#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dtco/device.hpp"
#include "dtco/error.hpp"
#include "dtco/lu.hpp"
#include "dtco/netlist.hpp"

namespace dtco {

struct SimOptions {
  double abstol = 1e-12;  // A, KCL residual
  double reltol = 1e-6;
  double vntol = 1e-6;  // V
  int max_newton_iters = 100;
  double gmin = 1e-12;  // S, across every device drain-source and the gmin-stepping floor
  double damping_clip = 0.3;  // V, per-step Newton update limit
  int max_backtracks = 6;     // step halvings when the residual grows
  int gmin_steps = 10;
  int source_steps = 10;
  double pt_cap = 1e-14;  // F, pseudo-transient node capacitance (last-resort homotopy)
  int pt_max_steps = 2000;

  void validate() const;
};

/// Maps a `.model` card to an evaluator. The default resolver builds the
/// analytic reference devices and loads `nn` model files relative to `base_dir`.
using ModelResolver = std::function<DeviceModelPtr(const ModelCard&)>;
ModelResolver default_model_resolver(const std::string& base_dir = ".");

/// Tabulated result. Columns: optional leading sweep/time column, then v(node)
/// for every non-ground node, then i(Vname) for every source (current flowing
/// through the source from n+ to n-).
struct SimResult {
  std::string analysis;  // "op" | "dc" | "tran"
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<int> newton_iterations;  // per row

  std::size_t column(const std::string& name) const;
  std::vector<double> series(const std::string& name) const;
  double at(std::size_t row, const std::string& name) const { return rows.at(row).at(column(name)); }

  /// CSV with 17 significant digits; `items` selects columns (all when empty).
  void save_csv(const std::string& path, const std::vector<PrintItem>& items = {}) const;
};

/// A transient step failed. `partial` holds the rows up to the last converged step.
class TransientError : public SolverError {
 public:
  TransientError(const std::string& msg, SimResult partial, double time)
      : SolverError(msg), partial(std::move(partial)), time(time) {}
  SimResult partial;
  double time;
};

/// One circuit, one isolated mutable context. Shares only immutable device models.
class Simulator {
 public:
  Simulator(const Netlist& nl, const ModelResolver& resolver, SimOptions opts = {});

  SimResult operating_point();
  SimResult dc_sweep(const std::string& source, double start, double stop, double step);
  SimResult transient(double tstep, double tstop);
  SimResult run(const Analysis& a);

  /// KCL residual and MNA Jacobian at state x (DC, sources at full scale, t = 0).
  void residual(const std::vector<double>& x, std::vector<double>& f, DenseMatrix& jac);

  std::size_t num_unknowns() const { return num_nodes_ - 1 + sources_.size(); }
  std::size_t node_index(const std::string& name) const;  // 0 = ground
  bool is_linear() const { return devices_.empty(); }
  const std::vector<std::string>& node_names() const { return node_names_; }

 private:
  struct TwoTerminal {
    std::size_t a, b;
    double value;
  };
  struct Source {
    std::string name;
    std::size_t pos, neg;
    Waveform wave;
  };
  struct Device {
    std::size_t d, g, s;
    DeviceModelPtr model;
  };

  struct Context {
    double source_scale = 1.0;
    double node_gmin = 0.0;
    double time = 0.0;
    double tstep = 0.0;  // > 0 in transient
    const std::vector<double>* x_prev = nullptr;
    const std::vector<DeviceResponse>* q_prev = nullptr;
    int override_source = -1;
    double override_value = 0.0;
    // Pseudo-transient continuation: capacitor pt_cap from every node to ground,
    // backward Euler step pt_h from pt_prev.
    double pt_h = 0.0;
    const std::vector<double>* pt_prev = nullptr;
  };

  void assemble(const std::vector<double>& x, const Context& ctx, std::vector<double>& f, DenseMatrix& jac,
                std::vector<DeviceResponse>& resp) const;
  bool newton(std::vector<double>& x, const Context& ctx, int& iterations, std::vector<DeviceResponse>& resp) const;
  void solve_op(std::vector<double>& x, Context ctx, int& iterations, std::vector<DeviceResponse>& resp) const;
  double volt(const std::vector<double>& x, std::size_t node) const { return node == 0 ? 0.0 : x[node - 1]; }
  std::vector<double> state_row(const std::vector<double>& x) const;
  std::vector<std::string> state_columns() const;
  double source_value(std::size_t k, const Context& ctx) const;

  SimOptions opts_;
  std::size_t num_nodes_ = 1;
  std::vector<std::string> node_names_;
  std::vector<TwoTerminal> resistors_, capacitors_;
  std::vector<Source> sources_;
  std::vector<Device> devices_;
};

/// Runs every analysis card of the netlist in order.
std::vector<SimResult> simulate(const Netlist& nl, const ModelResolver& resolver, const SimOptions& opts = {});

}  // namespace dtco

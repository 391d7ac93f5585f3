#include "dtco/mlp.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "dtco/error.hpp"
#include "dtco/kernels.hpp"
#include "dtco/numeric.hpp"
#include "dtco/rng.hpp"

namespace dtco {

void MLPSpec::validate() const {
  if (layer_sizes.size() < 3) throw ConfigError("MLP needs at least one hidden layer");
  for (int s : layer_sizes) {
    if (s < 1) throw ConfigError("MLP layer sizes must be positive");
  }
  if (layer_sizes.front() != 3 || layer_sizes.back() != 3) {
    throw ConfigError("MLP must map 3 inputs to 3 outputs, got " + label());
  }
}

std::size_t MLPSpec::num_params() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    n += std::size_t(layer_sizes[l] + 1) * layer_sizes[l + 1];
  }
  return n;
}

std::string MLPSpec::label() const {
  std::string s;
  for (std::size_t i = 0; i < layer_sizes.size(); ++i) {
    if (i) s += '-';
    s += std::to_string(layer_sizes[i]);
  }
  return s;
}

MLPSpec MLPSpec::hidden(int layers, int neurons) {
  MLPSpec s;
  s.layer_sizes.push_back(3);
  for (int i = 0; i < layers; ++i) s.layer_sizes.push_back(neurons);
  s.layer_sizes.push_back(3);
  return s;
}

std::size_t MLPParams::weight_offset(int l) const {
  std::size_t off = 0;
  for (int k = 0; k < l; ++k) off += std::size_t(in_size(k) + 1) * out_size(k);
  return off;
}

void MLPParams::validate() const {
  spec.validate();
  if (data.size() != spec.num_params()) throw ConfigError("MLP parameter count does not match spec");
  for (double v : data) {
    if (!std::isfinite(v)) throw ConfigError("MLP parameters contain non-finite values");
  }
}

MLPParams init_mlp(const MLPSpec& spec, std::uint64_t seed) {
  spec.validate();
  MLPParams p{spec, std::vector<double>(spec.num_params(), 0.0)};
  std::mt19937_64 gen(seed);
  for (int l = 0; l < spec.num_weight_layers(); ++l) {
    const double bound = std::sqrt(6.0 / (p.in_size(l) + p.out_size(l)));
    for (double& w : p.weights(l)) w = uniform(gen, -bound, bound);
  }
  return p;
}

Vec3 forward(const MLPParams& p, const Vec3& x) {
  const int layers = p.spec.num_weight_layers();
  std::vector<double> a(x.begin(), x.end());
  std::vector<double> next;
  for (int l = 0; l < layers; ++l) {
    const auto w = p.weights(l);
    const auto b = p.biases(l);
    const int nin = p.in_size(l);
    next.assign(b.begin(), b.end());
    for (std::size_t o = 0; o < next.size(); ++o) {
      for (int i = 0; i < nin; ++i) next[o] += w[o * nin + i] * a[i];
      if (l + 1 < layers) next[o] = std::tanh(next[o]);
    }
    a.swap(next);
  }
  return {a[0], a[1], a[2]};
}

void forward_with_jacobian(const MLPParams& p, const Vec3& x, Vec3& y, Mat3& jac) {
  // Forward-mode: carry d(activation)/dx (width x 3) alongside each layer.
  const int layers = p.spec.num_weight_layers();
  std::vector<double> a(x.begin(), x.end());
  std::vector<double> da = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  std::vector<double> next, dnext;
  for (int l = 0; l < layers; ++l) {
    const auto w = p.weights(l);
    const auto b = p.biases(l);
    const int nin = p.in_size(l);
    const int nout = p.out_size(l);
    next.assign(b.begin(), b.end());
    dnext.assign(std::size_t(nout) * 3, 0.0);
    for (int o = 0; o < nout; ++o) {
      for (int i = 0; i < nin; ++i) {
        const double wi = w[std::size_t(o) * nin + i];
        next[o] += wi * a[i];
        for (int c = 0; c < 3; ++c) dnext[o * 3 + c] += wi * da[i * 3 + c];
      }
      if (l + 1 < layers) {
        next[o] = std::tanh(next[o]);
        const double slope = 1.0 - next[o] * next[o];
        for (int c = 0; c < 3; ++c) dnext[o * 3 + c] *= slope;
      }
    }
    a.swap(next);
    da.swap(dnext);
  }
  for (int o = 0; o < 3; ++o) {
    y[o] = a[o];
    for (int c = 0; c < 3; ++c) jac[o][c] = da[o * 3 + c];
  }
}

Mat3 input_jacobian(const MLPParams& p, const Vec3& x) {
  Vec3 y;
  Mat3 j;
  forward_with_jacobian(p, x, y, j);
  return j;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in (0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
}

TrainingArrays to_arrays(const Dataset& ds) {
  TrainingArrays a;
  a.x.reserve(ds.size() * 3);
  a.y.reserve(ds.size() * 3);
  for (const auto& s : ds.samples) {
    const Vec3 xn = ds.input_norm.apply(s.bias);
    a.x.insert(a.x.end(), xn.begin(), xn.end());
    a.y.insert(a.y.end(), s.targets.begin(), s.targets.end());
  }
  return a;
}

TrainResult train(const MLPParams& p0, const Dataset& ds, const TrainConfig& cfg) {
  if (ds.empty()) throw ConfigError("cannot train on an empty dataset");
  return train(p0, to_arrays(ds), cfg);
}

TrainResult train(const MLPParams& p0, const TrainingArrays& data, const TrainConfig& cfg) {
  cfg.validate();
  p0.validate();
  const std::size_t n = data.rows();
  if (n == 0) throw ConfigError("cannot train on an empty dataset");

  TrainResult res{p0, {}};
  auto& params = res.params.data;
  const std::size_t np = params.size();
  std::vector<double> grad(np), m(np, 0.0), v(np, 0.0);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 gen(cfg.seed);

  double b1t = 1.0, b2t = 1.0;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    shuffle(order, gen);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t len = std::min(batch, n - start);
      kernels::batch_gradient(res.params, data.x, data.y, {order.data() + start, len}, grad);
      b1t *= cfg.beta1;
      b2t *= cfg.beta2;
      for (std::size_t k = 0; k < np; ++k) {
        m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * grad[k];
        v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * grad[k] * grad[k];
        const double mhat = m[k] / (1.0 - b1t);
        const double vhat = v[k] / (1.0 - b2t);
        params[k] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
      }
    }
    const double loss = kernels::mse(res.params, data.x, data.y);
    if (!std::isfinite(loss)) {
      throw TrainingError("training diverged at epoch " + std::to_string(epoch + 1) + " (loss " +
                          fmt17(loss) + ")");
    }
    res.loss_history.push_back(loss);
    if (loss <= cfg.target_loss) break;
  }
  return res;
}

double dataset_mse(const MLPParams& p, const Dataset& ds) {
  const auto a = to_arrays(ds);
  return kernels::mse(p, a.x, a.y);
}

std::vector<SweepRow> hyperparam_sweep(const Dataset& train_ds, const Dataset& heldout_ds,
                                       const std::vector<MLPSpec>& specs, const TrainConfig& cfg,
                                       int jobs) {
  if (specs.empty()) throw ConfigError("hyperparameter sweep needs at least one spec");
  if (train_ds.empty()) throw ConfigError("cannot train on an empty dataset");
  for (const auto& s : specs) s.validate();

  const auto train_arrays = to_arrays(train_ds);
  const auto held_arrays = to_arrays(heldout_ds);
  std::vector<SweepRow> rows(specs.size());
  const auto count = static_cast<long>(specs.size());
#pragma omp parallel for schedule(dynamic) num_threads(jobs > 0 ? jobs : 1) if (jobs > 1)
  for (long i = 0; i < count; ++i) {
    auto r = train(init_mlp(specs[i], cfg.seed), train_arrays, cfg);
    rows[i].spec = specs[i];
    rows[i].train_mse = r.loss_history.empty() ? kernels::mse(r.params, train_arrays.x, train_arrays.y)
                                               : r.loss_history.back();
    rows[i].heldout_mse = kernels::mse(r.params, held_arrays.x, held_arrays.y);
  }
  return rows;
}

void save_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "layers,neurons,spec,train_mse,heldout_mse\n";
  for (const auto& r : rows) {
    const auto& s = r.spec.layer_sizes;
    out << s.size() - 2 << ',' << s[1] << ',' << r.spec.label() << ',' << fmt17(r.train_mse) << ','
        << fmt17(r.heldout_mse) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

std::string to_string(Polarity p) { return p == Polarity::N ? "n" : "p"; }

Polarity polarity_from_string(const std::string& s) {
  if (s == "n" || s == "N") return Polarity::N;
  if (s == "p" || s == "P") return Polarity::P;
  throw ConfigError("unknown polarity '" + s + "'");
}

namespace {

void write_array(std::ostream& out, std::span<const double> v) {
  out << '[';
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << fmt17(v[i]);
  out << ']';
}

}  // namespace

std::string model_to_json(const NetModel& m) {
  const auto& p = m.params;
  std::ostringstream out;
  out << "{\n  \"version\": " << kModelFileVersion << ",\n  \"spec\": {\"layer_sizes\": [";
  for (std::size_t i = 0; i < p.spec.layer_sizes.size(); ++i) out << (i ? ", " : "") << p.spec.layer_sizes[i];
  out << "], \"activation\": \"tanh\"},\n  \"weights\": [";
  for (int l = 0; l < p.spec.num_weight_layers(); ++l) {
    out << (l ? ",\n    [" : "\n    [");
    const auto w = p.weights(l);
    const int nin = p.in_size(l);
    for (int o = 0; o < p.out_size(l); ++o) {
      out << (o ? ",\n      " : "\n      ");
      write_array(out, w.subspan(std::size_t(o) * nin, nin));
    }
    out << "\n    ]";
  }
  out << "\n  ],\n  \"biases\": [";
  for (int l = 0; l < p.spec.num_weight_layers(); ++l) {
    out << (l ? ",\n    " : "\n    ");
    write_array(out, p.biases(l));
  }
  out << "\n  ],\n  \"transform\": {\"i_ref\": " << fmt17(m.transform.i_ref)
      << ", \"q_ref\": " << fmt17(m.transform.q_ref) << "},\n  \"input_norm\": {\"offset\": ";
  write_array(out, m.input_norm.offset);
  out << ", \"half_range\": ";
  write_array(out, m.input_norm.half_range);
  out << "},\n  \"region_tag\": \"" << to_string(m.region) << "\",\n  \"polarity\": \""
      << to_string(m.polarity) << "\"\n}\n";
  return out.str();
}

namespace {

Vec3 vec3_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw IoError("model file: expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

NetModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("model file: ") + e.what());
  }
  try {
    if (!j.contains("version") || j.at("version").get<int>() != kModelFileVersion) {
      throw IoError("model file: unsupported version");
    }
    NetModel m;
    m.params.spec.layer_sizes = j.at("spec").at("layer_sizes").get<std::vector<int>>();
    if (j.at("spec").value("activation", "tanh") != "tanh") throw IoError("model file: unsupported activation");
    m.params.spec.validate();
    m.params.data.assign(m.params.spec.num_params(), 0.0);
    const auto& W = j.at("weights");
    const auto& B = j.at("biases");
    const int layers = m.params.spec.num_weight_layers();
    if (!W.is_array() || !B.is_array() || int(W.size()) != layers || int(B.size()) != layers) {
      throw IoError("model file: layer count does not match spec");
    }
    for (int l = 0; l < layers; ++l) {
      const int nin = m.params.in_size(l);
      const int nout = m.params.out_size(l);
      if (int(W[l].size()) != nout || int(B[l].size()) != nout) throw IoError("model file: layer shape mismatch");
      auto w = m.params.weights(l);
      auto b = m.params.biases(l);
      for (int o = 0; o < nout; ++o) {
        if (int(W[l][o].size()) != nin) throw IoError("model file: layer shape mismatch");
        for (int i = 0; i < nin; ++i) w[std::size_t(o) * nin + i] = W[l][o][i].get<double>();
        b[o] = B[l][o].get<double>();
      }
    }
    m.params.validate();
    m.transform.i_ref = j.at("transform").at("i_ref").get<double>();
    m.transform.q_ref = j.at("transform").at("q_ref").get<double>();
    m.transform.validate();
    m.input_norm.offset = vec3_from(j.at("input_norm").at("offset"));
    m.input_norm.half_range = vec3_from(j.at("input_norm").at("half_range"));
    for (double h : m.input_norm.half_range) {
      if (!(h > 0.0)) throw IoError("model file: input_norm half_range must be positive");
    }
    m.region = region_from_string(j.at("region_tag").get<std::string>());
    m.polarity = polarity_from_string(j.at("polarity").get<std::string>());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("model file: ") + e.what());
  } catch (const ConfigError& e) {
    throw IoError(std::string("model file: ") + e.what());
  }
}

void save_model(const NetModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << model_to_json(m);
  if (!out) throw IoError("write failed: " + path);
}

NetModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace dtco

#include "dtco/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "dtco/error.hpp"
#include "dtco/kernels.hpp"
#include "dtco/numeric.hpp"
#include "dtco/rng.hpp"

namespace dtco {

void TransformDescriptor::validate() const {
  if (!(i_ref > 0.0) || !(q_ref > 0.0)) throw ConfigError("transform references must be positive");
}

InputNorm InputNorm::from_range(double v_min, double v_max) {
  InputNorm n;
  const double mid = 0.5 * (v_min + v_max);
  const double half = v_max > v_min ? 0.5 * (v_max - v_min) : 1.0;
  n.offset = {mid, mid, mid};
  n.half_range = {half, half, half};
  return n;
}

bool InputNorm::contains(const BiasPoint& b, double slack) const {
  const Vec3 x = apply(b);
  for (double v : x) {
    if (std::abs(v) > 1.0 + slack) return false;
  }
  return true;
}

std::string to_string(RegionTag tag) {
  switch (tag) {
    case RegionTag::SymmetricCanonical: return "symmetric_canonical";
    case RegionTag::TfetFwd: return "tfet_fwd";
    case RegionTag::TfetRev: return "tfet_rev";
    case RegionTag::Unrestricted: return "unrestricted";
  }
  return "unrestricted";
}

RegionTag region_from_string(const std::string& s) {
  if (s == "symmetric_canonical") return RegionTag::SymmetricCanonical;
  if (s == "tfet_fwd") return RegionTag::TfetFwd;
  if (s == "tfet_rev") return RegionTag::TfetRev;
  if (s == "unrestricted") return RegionTag::Unrestricted;
  throw ConfigError("unknown region tag '" + s + "'");
}

Vec3 transform_targets(const DeviceResponse& raw, const TransformDescriptor& t) {
  return {std::asinh(raw.id / t.i_ref), raw.qg / t.q_ref, raw.qd / t.q_ref};
}

PhysicalTargets inverse_transform(const Vec3& y, const TransformDescriptor& t) {
  return {t.i_ref * std::sinh(y[0]), y[1] * t.q_ref, y[2] * t.q_ref};
}

int grid_axis_count(double v_min, double v_max, double step) {
  if (!(step > 0.0) || !(v_max > v_min)) throw ConfigError("grid needs v_max > v_min and step > 0");
  const double intervals = (v_max - v_min) / step;
  const double rounded = std::round(intervals);
  if (std::abs(intervals - rounded) > 1e-9) {
    throw ConfigError("grid step " + fmt17(step) + " does not divide [" + fmt17(v_min) + ", " + fmt17(v_max) + "]");
  }
  return static_cast<int>(rounded) + 1;
}

namespace {

Dataset evaluate_into(const DeviceModel& dev, std::vector<BiasPoint> bias, const TransformDescriptor& t) {
  t.validate();
  std::vector<DeviceResponse> resp(bias.size());
  kernels::evaluate_devices(dev, bias, resp);
  Dataset ds;
  ds.transform = t;
  ds.samples.resize(bias.size());
  for (std::size_t i = 0; i < bias.size(); ++i) {
    ds.samples[i].bias = bias[i];
    ds.samples[i].targets = transform_targets(resp[i], t);
  }
  return ds;
}

}  // namespace

Dataset generate_grid(const DeviceModel& dev, double v_min, double v_max, double step,
                      const TransformDescriptor& t) {
  const int n = grid_axis_count(v_min, v_max, step);
  std::vector<double> axis(n);
  // Computed from the index so the last value is exactly v_max.
  for (int i = 0; i < n; ++i) axis[i] = i + 1 == n ? v_max : v_min + i * step;
  std::vector<BiasPoint> bias;
  bias.reserve(std::size_t(n) * n * n);
  for (double vg : axis) {
    for (double vd : axis) {
      for (double vs : axis) bias.push_back({vg, vd, vs});
    }
  }
  Dataset ds = evaluate_into(dev, std::move(bias), t);
  ds.input_norm = InputNorm::from_range(v_min, v_max);
  return ds;
}

Dataset canonicalize_symmetric(const Dataset& ds) {
  Dataset out;
  out.input_norm = ds.input_norm;
  out.transform = ds.transform;
  out.region = RegionTag::SymmetricCanonical;
  for (const auto& s : ds.samples) {
    if (s.bias.vd >= s.bias.vs) out.samples.push_back(s);
  }
  return out;
}

std::pair<Dataset, Dataset> split_regions_tfet(const Dataset& ds) {
  Dataset fwd, rev;
  for (Dataset* d : {&fwd, &rev}) {
    d->input_norm = ds.input_norm;
    d->transform = ds.transform;
  }
  fwd.region = RegionTag::TfetFwd;
  rev.region = RegionTag::TfetRev;
  for (const auto& s : ds.samples) {
    if (s.bias.vd >= s.bias.vs) fwd.samples.push_back(s);
    if (s.bias.vd <= s.bias.vs) rev.samples.push_back(s);
  }
  return {std::move(fwd), std::move(rev)};
}

Dataset sample_random(const DeviceModel& dev, double v_min, double v_max, std::size_t count,
                      std::uint64_t seed, const TransformDescriptor& t) {
  if (count == 0) throw ConfigError("sample_random needs count > 0");
  std::mt19937_64 gen(seed);
  std::vector<BiasPoint> bias(count);
  for (auto& b : bias) {
    b.vg = uniform(gen, v_min, v_max);
    b.vd = uniform(gen, v_min, v_max);
    b.vs = uniform(gen, v_min, v_max);
  }
  Dataset ds = evaluate_into(dev, std::move(bias), t);
  ds.input_norm = InputNorm::from_range(v_min, v_max);
  return ds;
}

Dataset subsample(const Dataset& ds, std::size_t n, std::uint64_t seed) {
  if (n >= ds.size()) return ds;
  std::vector<std::size_t> idx(ds.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 gen(seed);
  shuffle(idx, gen);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  Dataset out = ds;
  out.samples.clear();
  for (std::size_t i : idx) out.samples.push_back(ds.samples[i]);
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

constexpr const char* kMagic = "# dtco-dataset v1";
constexpr const char* kColumns = "vg,vd,vs,t0,t1,t2";

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw IoError("");
    return v;
  } catch (const std::exception&) {
    throw IoError("dataset: cannot parse " + what + " '" + s + "'");
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << kMagic << '\n';
  out << "# i_ref=" << fmt17(ds.transform.i_ref) << '\n';
  out << "# q_ref=" << fmt17(ds.transform.q_ref) << '\n';
  out << "# input_norm=";
  for (int k = 0; k < 3; ++k) {
    out << (k ? ";" : "") << fmt17(ds.input_norm.offset[k]) << ',' << fmt17(ds.input_norm.half_range[k]);
  }
  out << '\n';
  out << "# region_tag=" << to_string(ds.region) << '\n';
  out << kColumns << '\n';
  for (const auto& s : ds.samples) {
    out << fmt17(s.bias.vg) << ',' << fmt17(s.bias.vd) << ',' << fmt17(s.bias.vs) << ','
        << fmt17(s.targets[0]) << ',' << fmt17(s.targets[1]) << ',' << fmt17(s.targets[2]) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path);
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw IoError("dataset " + path + ": missing header");

  std::map<std::string, std::string> meta;
  bool have_columns = false;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw IoError("dataset " + path + ": malformed header line '" + line + "'");
      meta[line.substr(2, eq - 2)] = line.substr(eq + 1);
      continue;
    }
    if (line != kColumns) throw IoError("dataset " + path + ": expected column header '" + kColumns + "'");
    have_columns = true;
    break;
  }
  if (!have_columns) throw IoError("dataset " + path + ": missing column header");
  for (const char* key : {"i_ref", "q_ref", "input_norm", "region_tag"}) {
    if (!meta.count(key)) throw IoError(std::string("dataset ") + path + ": missing '" + key + "'");
  }

  Dataset ds;
  ds.transform.i_ref = parse_double(meta["i_ref"], "i_ref");
  ds.transform.q_ref = parse_double(meta["q_ref"], "q_ref");
  try {
    ds.transform.validate();
    ds.region = region_from_string(meta["region_tag"]);
  } catch (const ConfigError& e) {
    throw IoError("dataset " + path + ": " + e.what());
  }
  const auto axes = split(meta["input_norm"], ';');
  if (axes.size() != 3) throw IoError("dataset " + path + ": input_norm needs 3 entries");
  for (int k = 0; k < 3; ++k) {
    const auto pair = split(axes[k], ',');
    if (pair.size() != 2) throw IoError("dataset " + path + ": malformed input_norm");
    ds.input_norm.offset[k] = parse_double(pair[0], "input_norm");
    ds.input_norm.half_range[k] = parse_double(pair[1], "input_norm");
    if (!(ds.input_norm.half_range[k] > 0.0)) throw IoError("dataset " + path + ": input_norm half range must be positive");
  }

  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 6) throw IoError("dataset " + path + ": row " + std::to_string(row) + " has " + std::to_string(f.size()) + " fields");
    Sample s;
    s.bias = {parse_double(f[0], "vg"), parse_double(f[1], "vd"), parse_double(f[2], "vs")};
    for (int k = 0; k < 3; ++k) {
      s.targets[k] = parse_double(f[3 + k], "target");
      if (!std::isfinite(s.targets[k])) throw IoError("dataset " + path + ": non-finite target");
    }
    ds.samples.push_back(s);
  }
  return ds;
}

}  // namespace dtco

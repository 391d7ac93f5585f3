#include "dtco/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dtco::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {

std::size_t scratch_size(const MLPParams& p) {
  const auto& s = p.spec.layer_sizes;
  return 2 * static_cast<std::size_t>(std::accumulate(s.begin(), s.end(), 0));
}

// Forward pass of one row into `out`; `act` needs sum(layer_sizes) entries.
void forward_row(const MLPParams& p, const double* x, double* out, double* act) {
  const int layers = p.spec.num_weight_layers();
  std::copy(x, x + p.in_size(0), act);
  double* a = act;
  for (int l = 0; l < layers; ++l) {
    const int nin = p.in_size(l);
    const int nout = p.out_size(l);
    const double* w = p.data.data() + p.weight_offset(l);
    const double* b = p.data.data() + p.bias_offset(l);
    double* next = a + nin;
    const bool hidden = l + 1 < layers;
    for (int o = 0; o < nout; ++o) {
      double z = b[o];
      const double* wr = w + std::size_t(o) * nin;
      for (int i = 0; i < nin; ++i) z += wr[i] * a[i];
      next[o] = hidden ? std::tanh(z) : z;
    }
    a = next;
  }
  std::copy(a, a + p.out_size(layers - 1), out);
}

}  // namespace

double accumulate_sample_gradient(const MLPParams& p, const double* x, const double* y,
                                  std::span<double> grad, std::span<double> scratch) {
  const auto& sizes = p.spec.layer_sizes;
  const int layers = p.spec.num_weight_layers();
  const std::size_t total = scratch.size() / 2;
  double* act = scratch.data();
  double* delta = scratch.data() + total;

  // Activation offsets are running sums of the layer widths.
  std::size_t off = 0;
  std::copy(x, x + sizes[0], act);
  for (int l = 0; l < layers; ++l) {
    const int nin = sizes[l];
    const int nout = sizes[l + 1];
    const double* w = p.data.data() + p.weight_offset(l);
    const double* b = p.data.data() + p.bias_offset(l);
    const double* a = act + off;
    double* next = act + off + nin;
    const bool hidden = l + 1 < layers;
    for (int o = 0; o < nout; ++o) {
      double z = b[o];
      const double* wr = w + std::size_t(o) * nin;
      for (int i = 0; i < nin; ++i) z += wr[i] * a[i];
      next[o] = hidden ? std::tanh(z) : z;
    }
    off += nin;
  }

  const int nout_final = sizes[layers];
  double sq = 0.0;
  for (int o = 0; o < nout_final; ++o) {
    const double e = act[off + o] - y[o];
    sq += e * e;
    delta[off + o] = 2.0 * e;
  }

  for (int l = layers - 1; l >= 0; --l) {
    const int nin = sizes[l];
    const int nout = sizes[l + 1];
    const std::size_t in_off = off - nin;
    const double* a = act + in_off;
    const double* d = delta + off;
    const double* w = p.data.data() + p.weight_offset(l);
    double* gw = grad.data() + p.weight_offset(l);
    double* gb = grad.data() + p.bias_offset(l);
    for (int o = 0; o < nout; ++o) {
      double* gwr = gw + std::size_t(o) * nin;
      for (int i = 0; i < nin; ++i) gwr[i] += d[o] * a[i];
      gb[o] += d[o];
    }
    if (l > 0) {
      double* dprev = delta + in_off;
      for (int i = 0; i < nin; ++i) dprev[i] = 0.0;
      for (int o = 0; o < nout; ++o) {
        const double* wr = w + std::size_t(o) * nin;
        for (int i = 0; i < nin; ++i) dprev[i] += wr[i] * d[o];
      }
      for (int i = 0; i < nin; ++i) dprev[i] *= 1.0 - a[i] * a[i];
    }
    off = in_off;
  }
  return sq;
}

// ---------------------------------------------------------------------------
// OpenMP kernels

void evaluate_devices(const DeviceModel& dev, std::span<const BiasPoint> bias,
                      std::span<DeviceResponse> out) {
  const auto n = static_cast<long>(bias.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) out[i] = dev.eval(bias[i]);
}

void forward_batch(const MLPParams& p, std::span<const double> x, std::span<double> y) {
  const auto n = static_cast<long>(x.size() / 3);
  const std::size_t width = scratch_size(p) / 2;
#pragma omp parallel
  {
    std::vector<double> act(width);
#pragma omp for schedule(static)
    for (long r = 0; r < n; ++r) forward_row(p, x.data() + 3 * r, y.data() + 3 * r, act.data());
  }
}

double batch_gradient(const MLPParams& p, std::span<const double> x, std::span<const double> y,
                      std::span<const std::size_t> rows, std::span<double> grad) {
  const std::size_t np = p.data.size();
  const std::size_t nrows = rows.size();
  const auto nchunks = static_cast<long>((nrows + kChunk - 1) / kChunk);
  const std::size_t ss = scratch_size(p);
  std::vector<double> partial(std::size_t(nchunks) * np, 0.0);
  std::vector<double> chunk_sq(std::size_t(nchunks), 0.0);

#pragma omp parallel
  {
    std::vector<double> scratch(ss);
#pragma omp for schedule(static)
    for (long c = 0; c < nchunks; ++c) {
      std::span<double> g(partial.data() + std::size_t(c) * np, np);
      const std::size_t begin = std::size_t(c) * kChunk;
      const std::size_t end = std::min(nrows, begin + kChunk);
      double sq = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t r = rows[k];
        sq += accumulate_sample_gradient(p, x.data() + 3 * r, y.data() + 3 * r, g, scratch);
      }
      chunk_sq[c] = sq;
    }
  }

  std::fill(grad.begin(), grad.end(), 0.0);
  double sq = 0.0;
  for (long c = 0; c < nchunks; ++c) {
    const double* g = partial.data() + std::size_t(c) * np;
    for (std::size_t k = 0; k < np; ++k) grad[k] += g[k];
    sq += chunk_sq[c];
  }
  if (nrows == 0) return 0.0;
  const double scale = 1.0 / (3.0 * static_cast<double>(nrows));
  for (auto& g : grad) g *= scale;
  return sq;
}

double mse(const MLPParams& p, std::span<const double> x, std::span<const double> y) {
  const std::size_t nrows = x.size() / 3;
  if (nrows == 0) return 0.0;
  const auto nchunks = static_cast<long>((nrows + kChunk - 1) / kChunk);
  const std::size_t width = scratch_size(p) / 2;
  std::vector<double> chunk_sq(std::size_t(nchunks), 0.0);
#pragma omp parallel
  {
    std::vector<double> act(width);
    double out[3];
#pragma omp for schedule(static)
    for (long c = 0; c < nchunks; ++c) {
      const std::size_t begin = std::size_t(c) * kChunk;
      const std::size_t end = std::min(nrows, begin + kChunk);
      double sq = 0.0;
      for (std::size_t r = begin; r < end; ++r) {
        forward_row(p, x.data() + 3 * r, out, act.data());
        for (int o = 0; o < 3; ++o) {
          const double e = out[o] - y[3 * r + o];
          sq += e * e;
        }
      }
      chunk_sq[c] = sq;
    }
  }
  double sq = 0.0;
  for (double s : chunk_sq) sq += s;
  return sq / (3.0 * static_cast<double>(nrows));
}

// ---------------------------------------------------------------------------
// Serial reference kernels

namespace serial {

void evaluate_devices(const DeviceModel& dev, std::span<const BiasPoint> bias,
                      std::span<DeviceResponse> out) {
  for (std::size_t i = 0; i < bias.size(); ++i) out[i] = dev.eval(bias[i]);
}

void forward_batch(const MLPParams& p, std::span<const double> x, std::span<double> y) {
  for (std::size_t r = 0; r < x.size() / 3; ++r) {
    const Vec3 out = forward(p, {x[3 * r], x[3 * r + 1], x[3 * r + 2]});
    for (int o = 0; o < 3; ++o) y[3 * r + o] = out[o];
  }
}

double batch_gradient(const MLPParams& p, std::span<const double> x, std::span<const double> y,
                      std::span<const std::size_t> rows, std::span<double> grad) {
  std::vector<double> scratch(scratch_size(p));
  std::fill(grad.begin(), grad.end(), 0.0);
  double sq = 0.0;
  for (std::size_t r : rows) sq += accumulate_sample_gradient(p, x.data() + 3 * r, y.data() + 3 * r, grad, scratch);
  if (rows.empty()) return 0.0;
  const double scale = 1.0 / (3.0 * static_cast<double>(rows.size()));
  for (auto& g : grad) g *= scale;
  return sq;
}

double mse(const MLPParams& p, std::span<const double> x, std::span<const double> y) {
  const std::size_t nrows = x.size() / 3;
  if (nrows == 0) return 0.0;
  double sq = 0.0;
  for (std::size_t r = 0; r < nrows; ++r) {
    const Vec3 out = forward(p, {x[3 * r], x[3 * r + 1], x[3 * r + 2]});
    for (int o = 0; o < 3; ++o) sq += (out[o] - y[3 * r + o]) * (out[o] - y[3 * r + o]);
  }
  return sq / (3.0 * static_cast<double>(nrows));
}

}  // namespace serial
}  // namespace dtco::kernels

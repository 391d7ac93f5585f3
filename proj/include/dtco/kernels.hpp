#pragma once

// Data-parallel inner loops. Every kernel has a plain serial reference in
// `dtco::kernels::serial` that the tests compare against.
//
// Reductions in the parallel kernels are split into fixed-size chunks whose
// partial sums are combined in chunk order, so results never depend on the
// number of OpenMP threads.

#include <span>
#include <vector>

#include "dtco/device.hpp"
#include "dtco/mlp.hpp"

namespace dtco::kernels {

inline constexpr std::size_t kChunk = 32;

/// out[i] = dev.eval(bias[i])
void evaluate_devices(const DeviceModel& dev, std::span<const BiasPoint> bias,
                      std::span<DeviceResponse> out);

/// y (n x 3) = forward(p, x (n x 3))
void forward_batch(const MLPParams& p, std::span<const double> x, std::span<double> y);

/// Gradient of the mean squared error over the rows listed in `rows`, averaged
/// over rows and outputs. Returns the sum of squared errors of the batch.
double batch_gradient(const MLPParams& p, std::span<const double> x, std::span<const double> y,
                      std::span<const std::size_t> rows, std::span<double> grad);

/// Mean squared error over all rows and outputs.
double mse(const MLPParams& p, std::span<const double> x, std::span<const double> y);

namespace serial {

void evaluate_devices(const DeviceModel& dev, std::span<const BiasPoint> bias,
                      std::span<DeviceResponse> out);
void forward_batch(const MLPParams& p, std::span<const double> x, std::span<double> y);
double batch_gradient(const MLPParams& p, std::span<const double> x, std::span<const double> y,
                      std::span<const std::size_t> rows, std::span<double> grad);
double mse(const MLPParams& p, std::span<const double> x, std::span<const double> y);

}  // namespace serial

/// Per-sample backprop; accumulates d(sum of squared errors)/d params into grad
/// and returns this sample's squared error. Scratch must hold 2 * sum(layer_sizes).
double accumulate_sample_gradient(const MLPParams& p, const double* x, const double* y,
                                  std::span<double> grad, std::span<double> scratch);

int max_threads();

}  // namespace dtco::kernels

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dtco/dataset.hpp"

namespace dtco {

/// Layer widths including the 3 inputs and 3 outputs; tanh on hidden layers,
/// identity on the output layer.
struct MLPSpec {
  std::vector<int> layer_sizes;

  void validate() const;
  int num_weight_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  std::size_t num_params() const;
  std::string label() const;  // e.g. "3-32-32-3"

  static MLPSpec hidden(int layers, int neurons);
};

/// Flat parameter vector; each layer stores its weights (out x in, row-major)
/// followed by its biases.
struct MLPParams {
  MLPSpec spec;
  std::vector<double> data;

  int in_size(int l) const { return spec.layer_sizes[l]; }
  int out_size(int l) const { return spec.layer_sizes[l + 1]; }
  std::size_t weight_offset(int l) const;
  std::size_t bias_offset(int l) const { return weight_offset(l) + std::size_t(in_size(l)) * out_size(l); }

  std::span<double> weights(int l) { return {data.data() + weight_offset(l), std::size_t(in_size(l)) * out_size(l)}; }
  std::span<const double> weights(int l) const { return {data.data() + weight_offset(l), std::size_t(in_size(l)) * out_size(l)}; }
  std::span<double> biases(int l) { return {data.data() + bias_offset(l), std::size_t(out_size(l))}; }
  std::span<const double> biases(int l) const { return {data.data() + bias_offset(l), std::size_t(out_size(l))}; }

  /// Checks shape consistency and finiteness.
  void validate() const;
};

/// Xavier-uniform weights, zero biases.
MLPParams init_mlp(const MLPSpec& spec, std::uint64_t seed);

Vec3 forward(const MLPParams& p, const Vec3& x);

/// d forward / d x, rows = outputs, cols = inputs.
Mat3 input_jacobian(const MLPParams& p, const Vec3& x);

void forward_with_jacobian(const MLPParams& p, const Vec3& x, Vec3& y, Mat3& jac);

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 256;
  int max_epochs = 5000;
  double target_loss = 1e-7;
  std::uint64_t seed = 42;

  void validate() const;
};

struct TrainResult {
  MLPParams params;
  std::vector<double> loss_history;  // full-dataset MSE after each epoch
};

/// Row-major (n x 3) normalized inputs and transformed targets.
struct TrainingArrays {
  std::vector<double> x;
  std::vector<double> y;
  std::size_t rows() const { return x.size() / 3; }
};

TrainingArrays to_arrays(const Dataset& ds);

/// Mini-batch Adam on MSE over transformed targets. Deterministic in (p0, ds, cfg)
/// and independent of the OpenMP thread count.
TrainResult train(const MLPParams& p0, const Dataset& ds, const TrainConfig& cfg);
TrainResult train(const MLPParams& p0, const TrainingArrays& data, const TrainConfig& cfg);

double dataset_mse(const MLPParams& p, const Dataset& ds);

struct SweepRow {
  MLPSpec spec;
  double train_mse = 0.0;
  double heldout_mse = 0.0;
};

/// Trains each spec from init_mlp(spec, cfg.seed). `jobs` > 1 trains entries concurrently.
std::vector<SweepRow> hyperparam_sweep(const Dataset& train_ds, const Dataset& heldout_ds,
                                       const std::vector<MLPSpec>& specs, const TrainConfig& cfg,
                                       int jobs = 1);

void save_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);

enum class Polarity { N, P };
std::string to_string(Polarity p);
Polarity polarity_from_string(const std::string& s);

/// One trained network plus everything needed to turn its outputs back into
/// physical currents and charges.
struct NetModel {
  MLPParams params;
  TransformDescriptor transform;
  InputNorm input_norm;
  RegionTag region = RegionTag::Unrestricted;
  Polarity polarity = Polarity::N;
};

inline constexpr int kModelFileVersion = 1;

std::string model_to_json(const NetModel& m);
NetModel model_from_json(const std::string& text);
void save_model(const NetModel& m, const std::string& path);
NetModel load_model(const std::string& path);

}  // namespace dtco

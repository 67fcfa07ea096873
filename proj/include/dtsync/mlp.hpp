#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dtsync/rng.hpp"

// Minimal differentiable MLP: ReLU hidden layers, identity output,
// exact reverse-mode gradients, Adam, and a finite-difference probe.
// Double precision throughout.

namespace dtsync::nn {

struct MlpSpec {
  std::vector<int> sizes;  // input, hidden..., output

  int input_dim() const { return sizes.front(); }
  int output_dim() const { return sizes.back(); }
  int num_layers() const { return static_cast<int>(sizes.size()) - 1; }
  std::size_t param_count() const;
  std::size_t weight_offset(int layer) const;
  std::size_t bias_offset(int layer) const;
  bool operator==(const MlpSpec&) const = default;
};

/// Layer parameters stored flat: per layer, row-major weights [out x in]
/// followed by the bias.
class ParamSet {
 public:
  ParamSet() = default;
  explicit ParamSet(MlpSpec spec);

  /// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases.
  static ParamSet glorot(const MlpSpec& spec, rng::RngStream& rng);

  const MlpSpec& spec() const { return spec_; }
  std::size_t size() const { return flat_.size(); }
  double* data() { return flat_.data(); }
  const double* data() const { return flat_.data(); }
  std::vector<double>& flat() { return flat_; }
  const std::vector<double>& flat() const { return flat_; }

  double* w(int layer) { return flat_.data() + spec_.weight_offset(layer); }
  const double* w(int layer) const {
    return flat_.data() + spec_.weight_offset(layer);
  }
  double* b(int layer) { return flat_.data() + spec_.bias_offset(layer); }
  const double* b(int layer) const {
    return flat_.data() + spec_.bias_offset(layer);
  }

  void zero();
  void scale_layer(int layer, double factor);
  bool all_finite() const;

 private:
  MlpSpec spec_;
  std::vector<double> flat_;
};

/// Per-sample activations; reusable across calls.
struct Workspace {
  explicit Workspace(const MlpSpec& spec);
  Workspace() = default;

  void resize(const MlpSpec& spec);
  std::span<const double> output() const { return pre.back(); }

  std::vector<std::vector<double>> pre;     // z_l, one per layer
  std::vector<std::vector<double>> hidden;  // relu(z_l) for hidden layers
  std::vector<double> delta_a, delta_b;     // backprop scratch
};

/// Forward pass; the result lives in ws.output().
std::span<const double> forward(const ParamSet& params,
                                std::span<const double> input, Workspace& ws);
std::vector<double> forward(const ParamSet& params,
                            const std::vector<double>& input);

/// Reverse-mode gradients of <upstream, forward(input)>; accumulates into
/// grad (caller zeroes it), optionally writes d/d(input) to input_grad.
void backward(const ParamSet& params, std::span<const double> input,
              Workspace& ws, std::span<const double> upstream, ParamSet& grad,
              double* input_grad = nullptr);

/// Convenience: fresh forward + backward in one call.
void gradients(const ParamSet& params, std::span<const double> input,
               std::span<const double> upstream, ParamSet& grad,
               double* input_grad = nullptr);

/// d<upstream, output>/d(input) alone, skipping all parameter gradients;
/// ws must hold the activations of a preceding forward pass.
void input_gradient(const ParamSet& params, Workspace& ws,
                    std::span<const double> upstream, double* input_grad);

struct AdamState {
  explicit AdamState(std::size_t n, double lr);
  AdamState() = default;

  std::vector<double> m, v;
  long step = 0;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam step. Throws if the update produces a non-finite
/// parameter.
void adam_step(ParamSet& params, const ParamSet& grad, AdamState& state);

/// Max relative error between reverse-mode and central-difference
/// directional derivatives over a few random projections.
double finite_diff_check(const ParamSet& params,
                         const std::vector<double>& input,
                         rng::RngStream& rng, int projections = 4,
                         double h = 1e-5);

/// Same probe against a caller-supplied gradient (fault-injection hook).
double finite_diff_error(const ParamSet& params,
                         const std::vector<double>& input,
                         const std::vector<double>& upstream,
                         const ParamSet& candidate_grad, rng::RngStream& rng,
                         int projections = 4, double h = 1e-5);

/// Versioned little-endian checkpoint: header with layer sizes, then the
/// flat float64 parameter array.
void save_params(const std::string& path, const ParamSet& params);
ParamSet load_params(const std::string& path);

}  // namespace dtsync::nn

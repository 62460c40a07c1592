#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "convoy/random.hpp"

namespace convoy::nn {

/// Fully connected network: ReLU on hidden layers, identity on the output.
/// Parameters live in one flat buffer, layer by layer: row-major weights
/// [out][in] followed by the bias vector.
class DenseNet {
 public:
  DenseNet() = default;
  explicit DenseNet(std::vector<std::size_t> widths);

  /// Glorot-uniform weights, zero biases.
  static DenseNet glorot(std::vector<std::size_t> widths, Rng& rng);

  const std::vector<std::size_t>& widths() const { return widths_; }
  std::size_t layer_count() const { return widths_.empty() ? 0 : widths_.size() - 1; }
  std::size_t input_width() const { return widths_.front(); }
  std::size_t output_width() const { return widths_.back(); }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  double& weight(std::size_t layer, std::size_t out, std::size_t in);
  double weight(std::size_t layer, std::size_t out, std::size_t in) const;
  double& bias(std::size_t layer, std::size_t out);
  double bias(std::size_t layer, std::size_t out) const;

  /// Activations recorded by a forward pass; `act[0]` is the input and
  /// `pre[l]` the affine output of layer l before its activation.
  struct Tape {
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> act;
    std::span<const double> output() const { return act.back(); }
  };

  std::vector<double> forward(std::span<const double> input) const;
  void forward(std::span<const double> input, Tape& tape) const;

  /// Accumulates dL/dparams into `param_grad` (same layout as params()) and
  /// writes dL/dinput into `input_grad` when it is non-empty.
  void backward(const Tape& tape, std::span<const double> upstream, std::span<double> param_grad,
                std::span<double> input_grad) const;

  /// Folds every ReLU on/off decision of the tape into a hash.
  static std::uint64_t activation_signature(const Tape& tape, std::uint64_t seed = 0);

  void write(std::ostream& out) const;
  static DenseNet read(std::istream& in);

  friend bool operator==(const DenseNet&, const DenseNet&) = default;

 private:
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + widths_[layer] * widths_[layer + 1];
  }

  std::vector<std::size_t> widths_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  AdamState(std::size_t n, double lr) : m(n, 0.0), v(n, 0.0), learning_rate(lr) {}
};

/// One bias-corrected Adam update. A non-finite gradient raises Numerical and
/// leaves both params and state untouched.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

struct GradcheckProbe {
  double loss;
  /// Identifies the active piece of a piecewise-smooth loss (ReLU masks,
  /// max-aggregation winners). Coordinates whose finite-difference stencil
  /// crosses a piece boundary are skipped.
  std::uint64_t signature;
};

struct GradcheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  bool passed = false;
};

/// Central finite differences on `samples` randomly chosen coordinates of
/// `params` (all of them when samples == 0 or exceeds the count). Relative
/// error is |a - n| / max(|a|, |n|, 1e-6 * max|analytic|); the check passes
/// when the worst sampled error is strictly below `tolerance`.
GradcheckReport gradcheck(std::span<double> params, std::span<const double> analytic,
                          const std::function<GradcheckProbe()>& evaluate, double tolerance,
                          std::size_t samples, std::uint64_t seed, double step = 1e-5);

/// Convenience for a single network under a loss on its output; `loss`
/// returns the value and fills the output gradient.
GradcheckReport gradcheck(DenseNet& net, std::span<const double> input,
                          const std::function<double(std::span<const double>, std::span<double>)>& loss,
                          double tolerance, std::size_t samples = 0, std::uint64_t seed = 1);

namespace io {
void write_u32(std::ostream& out, std::uint32_t v);
void write_f64(std::ostream& out, double v);
std::uint32_t read_u32(std::istream& in);
double read_f64(std::istream& in);
}  // namespace io

}  // namespace convoy::nn

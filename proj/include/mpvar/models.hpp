#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace mpvar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Polynomial regression on all monomials of total degree <= `degree`
/// (or only pure powers when `include_interactions` is false).
struct PolySpec {
  int degree = 1;
  bool include_interactions = true;
};

enum class Activation { relu, tanh, logistic, linear };

[[nodiscard]] std::string_view to_string(Activation activation) noexcept;
[[nodiscard]] Activation parse_activation(std::string_view text);

/// Dense feed-forward regressor. `layer_sizes` lists input width, hidden
/// widths and output width; `activations` has one entry per hidden layer
/// (empty means ReLU everywhere). The output layer is always linear.
struct NetSpec {
  std::vector<std::size_t> layer_sizes{1, 1};
  std::vector<Activation> activations;
  std::uint64_t init_seed = 0;
  double learning_rate = 0.001;
  std::size_t batch_size = 32;
  std::size_t epochs = 200;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  [[nodiscard]] Activation hidden_activation(std::size_t hidden_index) const;
  /// Throws InvalidArgument on a malformed spec.
  void validate() const;
};

using ModelSpec = std::variant<PolySpec, NetSpec>;

/// Short stable identifier such as "poly2" or "net8-3-7-1-relu".
[[nodiscard]] std::string model_id(const ModelSpec& spec);

struct TrainedModel {
  ModelSpec spec;
  /// Regression coefficients (poly) or, per layer, the row-major weight
  /// matrix W (h_l x h_{l-1}) followed by the bias b (h_l).
  Vector parameters;
  /// Per-epoch mean training loss; a single in-sample MSE for polynomials.
  std::vector<double> training_loss_history;
};

// ---- polynomial family ----

/// Number of basis functions for d inputs.
[[nodiscard]] std::size_t poly_basis_size(std::size_t d, const PolySpec& spec);

/// Monomial design matrix in graded lexicographic order, constant first:
/// d = 2, degree 2 gives [1, x0, x1, x0^2, x0 x1, x1^2].
[[nodiscard]] Matrix poly_features(const Matrix& x, const PolySpec& spec);

/// Least squares via column-pivoting Householder QR. Throws SingularBasis
/// when n <= basis size or the basis is rank deficient.
[[nodiscard]] TrainedModel fit_poly(const Matrix& x, const Vector& y, const PolySpec& spec);

// ---- dense network family ----

[[nodiscard]] std::size_t net_parameter_count(const NetSpec& spec);

/// Glorot-normal weights N(0, 2 / (fan_in + fan_out)) drawn layer by layer in
/// row-major order from `init_seed`; biases zero.
[[nodiscard]] Vector glorot_normal_init(const NetSpec& spec);

/// Forward pass for a single input vector.
[[nodiscard]] Vector net_forward(const TrainedModel& model, std::span<const double> x);

/// Forward pass for a batch (one row per observation); returns n x out.
[[nodiscard]] Matrix net_forward_batch(const NetSpec& spec, const Vector& parameters,
                                       const Matrix& x);

/// Gradient of the batch mean squared error with respect to every parameter.
/// The network must have a single output.
[[nodiscard]] Vector net_gradients(const TrainedModel& model, const Matrix& batch_x,
                                   const Vector& batch_y);

struct AdamState {
  Vector first_moment;
  Vector second_moment;

  static AdamState zeros(Eigen::Index size) {
    return {Vector::Zero(size), Vector::Zero(size)};
  }
};

/// One bias-corrected Adam update of `params` in place; `step` counts from 1.
void adam_step(Vector& params, const Vector& grads, AdamState& state, std::size_t step,
               const NetSpec& spec);

/// Minibatch Adam on the MSE loss. Each epoch reshuffles the rows with a
/// stream derived from (init_seed, epoch). Throws NonFiniteLoss on blow-up.
[[nodiscard]] TrainedModel train_net(const Matrix& x, const Vector& y, const NetSpec& spec);

/// Spec of the network that only sees the `kept` input columns.
[[nodiscard]] NetSpec drop_features(const NetSpec& spec, std::span<const std::size_t> kept);
/// Trained network with the dropped columns of the first weight matrix removed.
[[nodiscard]] TrainedModel drop_features(const TrainedModel& model,
                                         std::span<const std::size_t> kept);

// ---- family-agnostic ----

[[nodiscard]] TrainedModel fit_model(const Matrix& x, const Vector& y, const ModelSpec& spec);
[[nodiscard]] Vector predict(const TrainedModel& model, const Matrix& x);

}  // namespace mpvar

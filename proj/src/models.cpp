#include "mpvar/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include <fmt/format.h>

#include "mpvar/error.hpp"
#include "mpvar/random.hpp"

namespace mpvar {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMajorMatrix>;
using Weights = Eigen::Map<RowMajorMatrix>;

constexpr std::uint64_t kShuffleStream = 0x5348554646ULL;  // "SHUFF"

// Offsets of W and b for layer l (1-based) inside the flat parameter vector.
struct LayerSlot {
  Eigen::Index weights = 0;
  Eigen::Index bias = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
};

std::vector<LayerSlot> layer_slots(const NetSpec& spec) {
  std::vector<LayerSlot> slots;
  Eigen::Index offset = 0;
  for (std::size_t l = 1; l < spec.layer_sizes.size(); ++l) {
    LayerSlot slot;
    slot.rows = static_cast<Eigen::Index>(spec.layer_sizes[l]);
    slot.cols = static_cast<Eigen::Index>(spec.layer_sizes[l - 1]);
    slot.weights = offset;
    slot.bias = offset + slot.rows * slot.cols;
    offset = slot.bias + slot.rows;
    slots.push_back(slot);
  }
  return slots;
}

void apply_activation(Matrix& z, Activation activation) {
  switch (activation) {
    case Activation::relu: z = z.cwiseMax(0.0); break;
    case Activation::tanh: z = z.array().tanh().matrix(); break;
    case Activation::logistic: z = (1.0 + (-z.array()).exp()).inverse().matrix(); break;
    case Activation::linear: break;
  }
}

// g'(z) evaluated from the pre-activation z.
Matrix activation_derivative(const Matrix& z, Activation activation) {
  switch (activation) {
    case Activation::relu: return (z.array() > 0.0).cast<double>().matrix();
    case Activation::tanh: return (1.0 - z.array().tanh().square()).matrix();
    case Activation::logistic: {
      const Eigen::ArrayXXd s = (1.0 + (-z.array()).exp()).inverse();
      return (s * (1.0 - s)).matrix();
    }
    case Activation::linear: return Matrix::Ones(z.rows(), z.cols());
  }
  return Matrix::Ones(z.rows(), z.cols());
}

void require_parameter_count(const NetSpec& spec, const Vector& parameters) {
  if (static_cast<std::size_t>(parameters.size()) != net_parameter_count(spec)) {
    throw Error(ErrorKind::DimensionMismatch,
                fmt::format("network expects {} parameters, got {}", net_parameter_count(spec),
                            parameters.size()));
  }
}

struct LossAndGradient {
  double loss = 0.0;  // batch MSE
  Vector gradient;
};

LossAndGradient mse_gradient(const NetSpec& spec, const Vector& parameters, const Matrix& x,
                             const Vector& y) {
  if (x.rows() == 0) {
    throw Error(ErrorKind::InvalidArgument, "empty batch");
  }
  if (x.rows() != y.size()) {
    throw Error(ErrorKind::DimensionMismatch, "batch_x and batch_y row counts differ");
  }
  if (static_cast<std::size_t>(x.cols()) != spec.layer_sizes.front()) {
    throw Error(ErrorKind::DimensionMismatch,
                fmt::format("network expects {} inputs, batch has {}", spec.layer_sizes.front(),
                            x.cols()));
  }
  if (spec.layer_sizes.back() != 1) {
    throw Error(ErrorKind::DimensionMismatch, "MSE training needs a single-output network");
  }
  require_parameter_count(spec, parameters);

  const auto slots = layer_slots(spec);
  const std::size_t layers = slots.size();
  std::vector<Matrix> pre(layers);   // Z_l
  std::vector<Matrix> post(layers + 1);  // A_l, A_0 = x
  post[0] = x;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& slot = slots[l];
    const ConstWeights w(parameters.data() + slot.weights, slot.rows, slot.cols);
    const auto b = parameters.segment(slot.bias, slot.rows);
    pre[l] = (post[l] * w.transpose()).rowwise() + b.transpose();
    post[l + 1] = pre[l];
    if (l + 1 < layers) apply_activation(post[l + 1], spec.hidden_activation(l));
  }

  const double batch = static_cast<double>(x.rows());
  const Vector error = post[layers].col(0) - y;
  LossAndGradient out;
  out.loss = error.squaredNorm() / batch;
  out.gradient = Vector::Zero(parameters.size());

  Matrix delta = (2.0 / batch) * error;
  for (std::size_t l = layers; l-- > 0;) {
    const auto& slot = slots[l];
    Weights grad_w(out.gradient.data() + slot.weights, slot.rows, slot.cols);
    grad_w = delta.transpose() * post[l];
    out.gradient.segment(slot.bias, slot.rows) = delta.colwise().sum().transpose();
    if (l > 0) {
      const ConstWeights w(parameters.data() + slot.weights, slot.rows, slot.cols);
      delta = (delta * w).cwiseProduct(activation_derivative(pre[l - 1], spec.hidden_activation(l - 1)));
    }
  }
  return out;
}

const NetSpec& net_spec_of(const TrainedModel& model) {
  const auto* spec = std::get_if<NetSpec>(&model.spec);
  if (spec == nullptr) {
    throw Error(ErrorKind::InvalidArgument, "operation requires a dense network model");
  }
  return *spec;
}

}  // namespace

std::string_view to_string(Activation activation) noexcept {
  switch (activation) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::logistic: return "logistic";
    case Activation::linear: return "linear";
  }
  return "relu";
}

Activation parse_activation(std::string_view text) {
  if (text == "relu") return Activation::relu;
  if (text == "tanh") return Activation::tanh;
  if (text == "logistic" || text == "sigmoid") return Activation::logistic;
  if (text == "linear") return Activation::linear;
  throw Error(ErrorKind::InvalidArgument, "unknown activation '" + std::string(text) + "'");
}

Activation NetSpec::hidden_activation(std::size_t hidden_index) const {
  if (activations.empty()) return Activation::relu;
  return activations.at(hidden_index);
}

void NetSpec::validate() const {
  if (layer_sizes.size() < 2) {
    throw Error(ErrorKind::InvalidArgument, "network needs at least input and output layers");
  }
  if (std::any_of(layer_sizes.begin(), layer_sizes.end(), [](std::size_t s) { return s == 0; })) {
    throw Error(ErrorKind::InvalidArgument, "layer sizes must be positive");
  }
  if (!activations.empty() && activations.size() != layer_sizes.size() - 2) {
    throw Error(ErrorKind::InvalidArgument,
                fmt::format("expected {} hidden activations, got {}", layer_sizes.size() - 2,
                            activations.size()));
  }
  if (!(learning_rate > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "learning rate must be positive");
  }
  if (batch_size == 0) {
    throw Error(ErrorKind::InvalidArgument, "batch size must be positive");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) ||
      !(adam_eps > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "Adam betas must lie in [0, 1) and eps > 0");
  }
}

std::string model_id(const ModelSpec& spec) {
  if (const auto* poly = std::get_if<PolySpec>(&spec)) {
    return fmt::format("poly{}{}", poly->degree, poly->include_interactions ? "" : "-pure");
  }
  const auto& net = std::get<NetSpec>(spec);
  std::string id = "net" + fmt::format("{}", fmt::join(net.layer_sizes, "-"));
  if (!net.activations.empty()) {
    std::vector<std::string_view> names;
    for (auto activation : net.activations) names.push_back(to_string(activation));
    id += "-" + fmt::format("{}", fmt::join(names, "-"));
  }
  return id;
}

// ---- polynomial ----

namespace {

// Exponent-free description of a monomial: the (non-decreasing) list of
// feature indices multiplied together.
std::vector<std::vector<std::size_t>> monomials(std::size_t d, const PolySpec& spec) {
  std::vector<std::vector<std::size_t>> terms{{}};
  for (int degree = 1; degree <= spec.degree; ++degree) {
    if (!spec.include_interactions) {
      for (std::size_t j = 0; j < d; ++j) terms.emplace_back(static_cast<std::size_t>(degree), j);
      continue;
    }
    std::vector<std::size_t> idx(static_cast<std::size_t>(degree), 0);
    for (;;) {
      terms.push_back(idx);
      // next non-decreasing tuple in lexicographic order
      std::size_t pos = idx.size();
      while (pos > 0 && idx[pos - 1] == d - 1) --pos;
      if (pos == 0) break;
      const std::size_t next = idx[pos - 1] + 1;
      for (std::size_t k = pos - 1; k < idx.size(); ++k) idx[k] = next;
    }
  }
  return terms;
}

}  // namespace

std::size_t poly_basis_size(std::size_t d, const PolySpec& spec) {
  return monomials(d, spec).size();
}

Matrix poly_features(const Matrix& x, const PolySpec& spec) {
  if (x.cols() < 1) {
    throw Error(ErrorKind::InvalidArgument, "polynomial basis needs at least one feature");
  }
  if (spec.degree < 1) {
    throw Error(ErrorKind::InvalidArgument, "polynomial degree must be >= 1");
  }
  const auto terms = monomials(static_cast<std::size_t>(x.cols()), spec);
  Matrix phi(x.rows(), static_cast<Eigen::Index>(terms.size()));
  for (std::size_t t = 0; t < terms.size(); ++t) {
    Vector column = Vector::Ones(x.rows());
    for (std::size_t j : terms[t]) column.array() *= x.col(static_cast<Eigen::Index>(j)).array();
    phi.col(static_cast<Eigen::Index>(t)) = column;
  }
  return phi;
}

TrainedModel fit_poly(const Matrix& x, const Vector& y, const PolySpec& spec) {
  if (x.rows() != y.size()) {
    throw Error(ErrorKind::DimensionMismatch, "features and target row counts differ");
  }
  const Matrix phi = poly_features(x, spec);
  if (phi.rows() <= phi.cols()) {
    throw Error(ErrorKind::SingularBasis,
                fmt::format("{} observations cannot determine {} coefficients", phi.rows(),
                            phi.cols()));
  }
  const Eigen::ColPivHouseholderQR<Matrix> qr(phi);
  if (qr.rank() < phi.cols()) {
    throw Error(ErrorKind::SingularBasis,
                fmt::format("basis matrix has rank {} < {}", qr.rank(), phi.cols()));
  }
  TrainedModel model;
  model.spec = spec;
  model.parameters = qr.solve(y);
  const double mse = (y - phi * model.parameters).squaredNorm() / static_cast<double>(y.size());
  model.training_loss_history = {mse};
  return model;
}

// ---- network ----

std::size_t net_parameter_count(const NetSpec& spec) {
  std::size_t count = 0;
  for (std::size_t l = 1; l < spec.layer_sizes.size(); ++l) {
    count += (spec.layer_sizes[l - 1] + 1) * spec.layer_sizes[l];
  }
  return count;
}

Vector glorot_normal_init(const NetSpec& spec) {
  spec.validate();
  Vector params = Vector::Zero(static_cast<Eigen::Index>(net_parameter_count(spec)));
  Rng rng(spec.init_seed);
  for (const auto& slot : layer_slots(spec)) {
    const double sd = std::sqrt(2.0 / static_cast<double>(slot.rows + slot.cols));
    for (Eigen::Index k = 0; k < slot.rows * slot.cols; ++k) {
      params[slot.weights + k] = sd * rng.normal();
    }
  }
  return params;
}

Matrix net_forward_batch(const NetSpec& spec, const Vector& parameters, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != spec.layer_sizes.front()) {
    throw Error(ErrorKind::DimensionMismatch,
                fmt::format("network expects {} inputs, got {}", spec.layer_sizes.front(),
                            x.cols()));
  }
  require_parameter_count(spec, parameters);
  const auto slots = layer_slots(spec);
  Matrix a = x;
  for (std::size_t l = 0; l < slots.size(); ++l) {
    const auto& slot = slots[l];
    const ConstWeights w(parameters.data() + slot.weights, slot.rows, slot.cols);
    Matrix z = (a * w.transpose()).rowwise() + parameters.segment(slot.bias, slot.rows).transpose();
    if (l + 1 < slots.size()) apply_activation(z, spec.hidden_activation(l));
    a = std::move(z);
  }
  return a;
}

Vector net_forward(const TrainedModel& model, std::span<const double> x) {
  const NetSpec& spec = net_spec_of(model);
  if (x.size() != spec.layer_sizes.front()) {
    throw Error(ErrorKind::DimensionMismatch,
                fmt::format("network expects {} inputs, got {}", spec.layer_sizes.front(),
                            x.size()));
  }
  Matrix row(1, static_cast<Eigen::Index>(x.size()));
  for (std::size_t j = 0; j < x.size(); ++j) row(0, static_cast<Eigen::Index>(j)) = x[j];
  return net_forward_batch(spec, model.parameters, row).row(0).transpose();
}

Vector net_gradients(const TrainedModel& model, const Matrix& batch_x, const Vector& batch_y) {
  return mse_gradient(net_spec_of(model), model.parameters, batch_x, batch_y).gradient;
}

void adam_step(Vector& params, const Vector& grads, AdamState& state, std::size_t step,
               const NetSpec& spec) {
  if (params.size() != grads.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw Error(ErrorKind::DimensionMismatch, "Adam parameter, gradient and moment sizes differ");
  }
  if (step < 1) {
    throw Error(ErrorKind::InvalidArgument, "Adam step counter starts at 1");
  }
  const double b1 = spec.adam_beta1;
  const double b2 = spec.adam_beta2;
  state.first_moment = b1 * state.first_moment + (1.0 - b1) * grads;
  state.second_moment = b2 * state.second_moment + (1.0 - b2) * grads.cwiseAbs2();
  const double t = static_cast<double>(step);
  const double correction1 = 1.0 - std::pow(b1, t);
  const double correction2 = 1.0 - std::pow(b2, t);
  params.array() -= spec.learning_rate * (state.first_moment.array() / correction1) /
                    ((state.second_moment.array() / correction2).sqrt() + spec.adam_eps);
}

TrainedModel train_net(const Matrix& x, const Vector& y, const NetSpec& spec) {
  spec.validate();
  if (x.rows() != y.size()) {
    throw Error(ErrorKind::DimensionMismatch, "features and target row counts differ");
  }
  const auto n = static_cast<std::size_t>(x.rows());
  if (n < spec.batch_size) {
    throw Error(ErrorKind::InvalidArgument,
                fmt::format("{} rows is fewer than one batch of {}", n, spec.batch_size));
  }
  TrainedModel model;
  model.spec = spec;
  model.parameters = glorot_normal_init(spec);
  AdamState state = AdamState::zeros(model.parameters.size());
  const std::uint64_t shuffle_seed = derive_seed(spec.init_seed, kShuffleStream);

  std::vector<Eigen::Index> order(n);
  std::size_t step = 0;
  Matrix batch_x;
  Vector batch_y;
  for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Rng rng(shuffle_seed, epoch);
    rng.shuffle(std::span<Eigen::Index>(order));
    double epoch_sse = 0.0;
    for (std::size_t start = 0; start < n; start += spec.batch_size) {
      const std::size_t count = std::min(spec.batch_size, n - start);
      const auto rows = std::span<const Eigen::Index>(order).subspan(start, count);
      batch_x = x(rows, Eigen::all);
      batch_y = y(rows);
      const LossAndGradient lg = mse_gradient(spec, model.parameters, batch_x, batch_y);
      if (!std::isfinite(lg.loss) || !lg.gradient.allFinite()) {
        throw Error(ErrorKind::NonFiniteLoss,
                    fmt::format("loss diverged at epoch {}, step {}", epoch, step + 1));
      }
      adam_step(model.parameters, lg.gradient, state, ++step, spec);
      epoch_sse += lg.loss * static_cast<double>(count);
    }
    model.training_loss_history.push_back(epoch_sse / static_cast<double>(n));
  }
  return model;
}

NetSpec drop_features(const NetSpec& spec, std::span<const std::size_t> kept) {
  if (kept.empty()) {
    throw Error(ErrorKind::EmptyFeatureSet, "at least one input feature must be kept");
  }
  std::set<std::size_t> unique(kept.begin(), kept.end());
  if (unique.size() != kept.size() || *unique.rbegin() >= spec.layer_sizes.front()) {
    throw Error(ErrorKind::InvalidArgument, "kept feature indices must be distinct and in range");
  }
  NetSpec reduced = spec;
  reduced.layer_sizes.front() = kept.size();
  return reduced;
}

TrainedModel drop_features(const TrainedModel& model, std::span<const std::size_t> kept) {
  const NetSpec& spec = net_spec_of(model);
  require_parameter_count(spec, model.parameters);
  TrainedModel reduced;
  const NetSpec reduced_spec = drop_features(spec, kept);
  reduced.spec = reduced_spec;
  reduced.training_loss_history = model.training_loss_history;
  reduced.parameters.resize(static_cast<Eigen::Index>(net_parameter_count(reduced_spec)));

  const auto old_slots = layer_slots(spec);
  const auto new_slots = layer_slots(reduced_spec);
  const ConstWeights w_old(model.parameters.data() + old_slots[0].weights, old_slots[0].rows,
                           old_slots[0].cols);
  Weights w_new(reduced.parameters.data() + new_slots[0].weights, new_slots[0].rows,
                new_slots[0].cols);
  for (std::size_t k = 0; k < kept.size(); ++k) {
    w_new.col(static_cast<Eigen::Index>(k)) = w_old.col(static_cast<Eigen::Index>(kept[k]));
  }
  // Everything after the first weight matrix is carried over unchanged.
  const Eigen::Index tail = model.parameters.size() - old_slots[0].bias;
  reduced.parameters.segment(new_slots[0].bias, tail) =
      model.parameters.segment(old_slots[0].bias, tail);
  return reduced;
}

TrainedModel fit_model(const Matrix& x, const Vector& y, const ModelSpec& spec) {
  if (const auto* poly = std::get_if<PolySpec>(&spec)) return fit_poly(x, y, *poly);
  return train_net(x, y, std::get<NetSpec>(spec));
}

Vector predict(const TrainedModel& model, const Matrix& x) {
  if (const auto* poly = std::get_if<PolySpec>(&model.spec)) {
    const Matrix phi = poly_features(x, *poly);
    if (phi.cols() != model.parameters.size()) {
      throw Error(ErrorKind::DimensionMismatch, "polynomial basis size does not match model");
    }
    return phi * model.parameters;
  }
  const auto& spec = std::get<NetSpec>(model.spec);
  return net_forward_batch(spec, model.parameters, x).col(0);
}

}  // namespace mpvar

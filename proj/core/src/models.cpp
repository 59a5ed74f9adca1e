#include "semattack/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semattack/error.hpp"

namespace semattack {

void Classifier::check_input(const Vector& x) const {
  if (x.size() != input_dim()) {
    throw DimensionMismatch("model input has dimension " + std::to_string(x.size()) +
                            ", expected " + std::to_string(input_dim()));
  }
}

// ---------------------------------------------------------------------------
// LinearModel

LinearModel::LinearModel(Vector w) : w_hat_(std::move(w)) {
  const double norm = norm_l2(w_hat_);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw InvalidArgument("linear model weight must be finite and nonzero");
  }
  // Already-unit weights (e.g. from a checkpoint) are kept bit-exact.
  if (std::abs(norm - 1.0) > 1e-12) w_hat_ *= 1.0 / norm;
}

Vector LinearModel::logits(const Vector& x) const {
  check_input(x);
  const double s = dot(w_hat_, x);
  return {s, -s};
}

Vector LinearModel::input_vjp(const Vector& x, const Vector& upstream) const {
  check_input(x);
  return (upstream[0] - upstream[1]) * w_hat_;
}

void LinearModel::set_parameters(std::span<const double> params) {
  if (params.size() != w_hat_.size()) throw DimensionMismatch("linear parameter size");
  *this = LinearModel(Vector(std::vector<double>(params.begin(), params.end())));
}

void LinearModel::accumulate_parameter_vjp(const Vector& x, const Vector& upstream,
                                           std::span<double> grad) const {
  check_input(x);
  const double scale = upstream[0] - upstream[1];
  for (std::size_t i = 0; i < x.size(); ++i) grad[i] += scale * x[i];
}

std::unique_ptr<Classifier> LinearModel::clone() const {
  return std::make_unique<LinearModel>(*this);
}

Json LinearModel::weights_json() const { return {{"w_hat", to_json(w_hat_)}}; }

LinearModel LinearModel::fit_mean_difference(const Dataset& data,
                                             std::span<const std::size_t> rows) {
  if (rows.empty()) throw InvalidArgument("fit_mean_difference: no rows");
  Vector acc(data.dim());
  for (std::size_t i : rows) {
    const double y = static_cast<double>(data.y[i]);
    auto row = data.X.row(i);
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += y * row[j];
  }
  return LinearModel(std::move(acc));
}

// ---------------------------------------------------------------------------
// TwoLayerMlp

TwoLayerMlp::TwoLayerMlp(Matrix w1, Vector b1, Matrix w2, Vector b2)
    : w1_(std::move(w1)), b1_(std::move(b1)), w2_(std::move(w2)), b2_(std::move(b2)) {
  if (w1_.rows() != b1_.size() || w2_.cols() != w1_.rows() || w2_.rows() != b2_.size()) {
    throw DimensionMismatch("inconsistent MLP layer shapes");
  }
  if (b2_.size() != kNumClasses) throw InvalidArgument("MLP must have exactly two outputs");
  for (auto s : {w1_.flat(), b1_.span(), w2_.flat(), b2_.span()}) {
    if (!all_finite(s)) throw InvalidArgument("non-finite MLP weight");
  }
}

TwoLayerMlp TwoLayerMlp::initialize(std::size_t d, std::size_t hidden, SeededRng& rng) {
  if (d == 0 || hidden == 0) throw InvalidArgument("MLP dimensions must be positive");
  Matrix w1(hidden, d);
  const double s1 = std::sqrt(2.0 / static_cast<double>(d));
  for (double& w : w1.flat()) w = s1 * rng.normal();
  Matrix w2(kNumClasses, hidden);
  const double s2 = std::sqrt(1.0 / static_cast<double>(hidden));
  for (double& w : w2.flat()) w = s2 * rng.normal();
  return {std::move(w1), Vector(hidden), std::move(w2), Vector(kNumClasses)};
}

Vector TwoLayerMlp::hidden_preactivation(const Vector& x) const {
  check_input(x);
  Vector z = matvec(w1_, x);
  z += b1_;
  return z;
}

Vector TwoLayerMlp::logits(const Vector& x) const {
  Vector h = hidden_preactivation(x);
  for (double& v : h) v = std::max(v, 0.0);
  Vector out = matvec(w2_, h);
  out += b2_;
  return out;
}

Vector TwoLayerMlp::input_vjp(const Vector& x, const Vector& upstream) const {
  const Vector z = hidden_preactivation(x);
  Vector dh = matvec_transposed(w2_, upstream);
  for (std::size_t i = 0; i < dh.size(); ++i) {
    if (!(z[i] > 0.0)) dh[i] = 0.0;
  }
  return matvec_transposed(w1_, dh);
}

std::size_t TwoLayerMlp::parameter_count() const {
  return w1_.flat().size() + b1_.size() + w2_.flat().size() + b2_.size();
}

std::vector<double> TwoLayerMlp::parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (auto s : {w1_.flat(), b1_.span(), w2_.flat(), b2_.span()}) {
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

void TwoLayerMlp::set_parameters(std::span<const double> params) {
  if (params.size() != parameter_count()) throw DimensionMismatch("MLP parameter size");
  std::size_t offset = 0;
  for (auto dst : {w1_.flat(), b1_.span(), w2_.flat(), b2_.span()}) {
    std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(offset), dst.size(), dst.begin());
    offset += dst.size();
  }
}

void TwoLayerMlp::accumulate_parameter_vjp(const Vector& x, const Vector& upstream,
                                           std::span<double> grad) const {
  const Vector z = hidden_preactivation(x);
  const std::size_t h = z.size();
  const std::size_t d = x.size();
  const std::size_t c = b2_.size();
  const std::size_t off_b1 = h * d;
  const std::size_t off_w2 = off_b1 + h;
  const std::size_t off_b2 = off_w2 + c * h;

  Vector dh(h);
  for (std::size_t k = 0; k < c; ++k) {
    const double u = upstream[k];
    grad[off_b2 + k] += u;
    if (u == 0.0) continue;
    for (std::size_t j = 0; j < h; ++j) {
      const double a = std::max(z[j], 0.0);
      grad[off_w2 + k * h + j] += u * a;
      dh[j] += u * w2_(k, j);
    }
  }
  for (std::size_t j = 0; j < h; ++j) {
    if (!(z[j] > 0.0)) continue;
    const double g = dh[j];
    grad[off_b1 + j] += g;
    double* row = grad.data() + j * d;
    for (std::size_t i = 0; i < d; ++i) row[i] += g * x[i];
  }
}

std::unique_ptr<Classifier> TwoLayerMlp::clone() const {
  return std::make_unique<TwoLayerMlp>(*this);
}

Json TwoLayerMlp::weights_json() const {
  return {{"W1", to_json(w1_)}, {"b1", to_json(b1_)}, {"W2", to_json(w2_)}, {"b2", to_json(b2_)}};
}

// ---------------------------------------------------------------------------

Vector input_gradient(const Classifier& model, const Vector& x, LossKind loss,
                      std::size_t true_idx) {
  const Vector z = model.logits(x);
  const Vector upstream =
      loss == LossKind::cw ? cw_attack_loss_grad(z, true_idx) : cross_entropy_grad(z, true_idx);
  return model.input_vjp(x, upstream);
}

AdamState::AdamState(std::size_t size, double lr_, double beta1_, double beta2_,
                     double epsilon_)
    : first_moment(size, 0.0),
      second_moment(size, 0.0),
      lr(lr_),
      beta1(beta1_),
      beta2(beta2_),
      epsilon(epsilon_) {
  if (!(lr > 0.0)) throw InvalidArgument("ADAM learning rate must be > 0");
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw DimensionMismatch("adam_step: parameter, gradient and state sizes differ");
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g * g;
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

namespace {

struct LossAndAccuracy {
  double loss = 0.0;
  double accuracy = 1.0;
};

LossAndAccuracy evaluate(const Classifier& model, const Dataset& data,
                         std::span<const std::size_t> rows) {
  if (rows.empty()) return {};
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t i : rows) {
    const Vector z = model.logits(data.sample(i));
    const std::size_t idx = label_to_index(data.y[i]);
    loss += cross_entropy(z, idx);
    if (argmax(z) == idx) ++correct;
  }
  const auto n = static_cast<double>(rows.size());
  return {loss / n, static_cast<double>(correct) / n};
}

}  // namespace

std::vector<EpochMetrics> train(Classifier& model, const Dataset& data, std::size_t epochs,
                                AdamState& adam, SeededRng& rng, std::size_t batch_size) {
  if (data.split.train.empty()) throw InvalidArgument("train: empty train split");
  if (batch_size == 0) throw InvalidArgument("train: batch size must be positive");
  if (model.input_dim() != data.dim()) throw DimensionMismatch("train: model/data dimension");

  std::vector<std::size_t> order = data.split.train;
  std::vector<double> params = model.parameters();
  std::vector<double> grad(params.size());
  std::vector<EpochMetrics> history;

  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.uniform_index(i)]);
    }
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t stop = std::min(order.size(), start + batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (std::size_t b = start; b < stop; ++b) {
        const Vector x = data.sample(order[b]);
        const Vector z = model.logits(x);
        Vector upstream = cross_entropy_grad(z, label_to_index(data.y[order[b]]));
        upstream *= inv;
        model.accumulate_parameter_vjp(x, upstream, grad);
      }
      adam_step(adam, params, grad);
      model.set_parameters(params);
      // Re-read in case the model projects its parameters (unit-norm linear).
      params = model.parameters();
    }
    const auto tr = evaluate(model, data, data.split.train);
    const auto va = evaluate(model, data, data.split.val);
    history.push_back({epoch, tr.loss, tr.accuracy, va.loss, va.accuracy});
  }
  return history;
}

double accuracy(const Classifier& model, const Matrix& X, const std::vector<int>& y,
                std::span<const std::size_t> rows) {
  if (rows.empty()) {
    warn("accuracy over an empty set is reported as 1.0");
    return 1.0;
  }
  std::size_t correct = 0;
  for (std::size_t i : rows) {
    if (model.predict(X.row_vector(i)) == label_to_index(y[i])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

double accuracy(const Classifier& model, const Matrix& X, const std::vector<int>& y) {
  std::vector<std::size_t> rows(y.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return accuracy(model, X, y, rows);
}

Json model_to_json(const Classifier& model, const Json& config) {
  Json doc;
  doc["kind"] = model.kind();
  doc["d"] = model.input_dim();
  const auto* mlp = dynamic_cast<const TwoLayerMlp*>(&model);
  doc["h"] = mlp != nullptr ? mlp->hidden_width() : 0;
  doc["c"] = model.num_classes();
  doc["weights"] = model.weights_json();
  doc["config"] = config;
  return doc;
}

std::unique_ptr<Classifier> model_from_json(const Json& doc) {
  try {
    const auto kind = doc.at("kind").get<std::string>();
    const auto& w = doc.at("weights");
    std::unique_ptr<Classifier> model;
    if (kind == "linear") {
      model = std::make_unique<LinearModel>(vector_from_json(w.at("w_hat")));
    } else if (kind == "mlp") {
      model = std::make_unique<TwoLayerMlp>(matrix_from_json(w.at("W1")), vector_from_json(w.at("b1")),
                                            matrix_from_json(w.at("W2")), vector_from_json(w.at("b2")));
    } else {
      throw IoError("unknown model kind '" + kind + "'");
    }
    if (model->input_dim() != doc.at("d").get<std::size_t>()) {
      throw IoError("checkpoint dimension does not match weights");
    }
    return model;
  } catch (const Json::exception& e) {
    throw IoError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_model(const Classifier& model, const std::filesystem::path& path, const Json& config) {
  write_file_atomic(path, model_to_json(model, config).dump());
}

std::unique_ptr<Classifier> load_model(const std::filesystem::path& path) {
  return model_from_json(read_json_file(path));
}

}  // namespace semattack

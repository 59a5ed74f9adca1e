#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "semattack/data.hpp"
#include "semattack/io.hpp"
#include "semattack/losses.hpp"
#include "semattack/tensor.hpp"

namespace semattack {

inline constexpr std::size_t kNumClasses = 2;

/// Binary classifier exposing logits and the two vector-Jacobian products
/// attacks and training need.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::string kind() const = 0;
  virtual std::size_t input_dim() const = 0;
  std::size_t num_classes() const noexcept { return kNumClasses; }

  virtual Vector logits(const Vector& x) const = 0;

  /// (d logits / d x)^T * upstream.
  virtual Vector input_vjp(const Vector& x, const Vector& upstream) const = 0;

  virtual std::size_t parameter_count() const = 0;
  virtual std::vector<double> parameters() const = 0;
  virtual void set_parameters(std::span<const double> params) = 0;

  /// grad += (d logits / d params)^T * upstream.
  virtual void accumulate_parameter_vjp(const Vector& x, const Vector& upstream,
                                        std::span<double> grad) const = 0;

  virtual std::unique_ptr<Classifier> clone() const = 0;

  virtual Json weights_json() const = 0;

  std::size_t predict(const Vector& x) const { return argmax(logits(x)); }

 protected:
  void check_input(const Vector& x) const;
};

/// f(x) = sign(<w_hat, x>) with logits (s, -s), s = <w_hat, x>.
class LinearModel final : public Classifier {
 public:
  /// Normalizes `w` to unit l2 norm; throws on a zero vector.
  explicit LinearModel(Vector w);

  const Vector& w_hat() const noexcept { return w_hat_; }

  std::string kind() const override { return "linear"; }
  std::size_t input_dim() const override { return w_hat_.size(); }
  Vector logits(const Vector& x) const override;
  Vector input_vjp(const Vector& x, const Vector& upstream) const override;
  std::size_t parameter_count() const override { return w_hat_.size(); }
  std::vector<double> parameters() const override { return w_hat_.values(); }
  /// Renormalizes after assignment so the unit-norm invariant survives any
  /// optimizer update.
  void set_parameters(std::span<const double> params) override;
  void accumulate_parameter_vjp(const Vector& x, const Vector& upstream,
                                std::span<double> grad) const override;
  std::unique_ptr<Classifier> clone() const override;
  Json weights_json() const override;

  /// w_hat proportional to mean(y_i x_i) over the given rows (the class-mean
  /// difference for balanced classes).
  static LinearModel fit_mean_difference(const Dataset& data,
                                         std::span<const std::size_t> rows);

 private:
  Vector w_hat_;
};

/// logits = W2 relu(W1 x + b1) + b2 with one hidden layer of width h.
class TwoLayerMlp final : public Classifier {
 public:
  TwoLayerMlp(Matrix w1, Vector b1, Matrix w2, Vector b2);

  /// He-normal hidden weights, 1/h-variance output weights, zero biases.
  static TwoLayerMlp initialize(std::size_t d, std::size_t hidden, SeededRng& rng);

  const Matrix& w1() const noexcept { return w1_; }
  const Vector& b1() const noexcept { return b1_; }
  const Matrix& w2() const noexcept { return w2_; }
  const Vector& b2() const noexcept { return b2_; }
  std::size_t hidden_width() const noexcept { return b1_.size(); }

  std::string kind() const override { return "mlp"; }
  std::size_t input_dim() const override { return w1_.cols(); }
  Vector logits(const Vector& x) const override;
  Vector input_vjp(const Vector& x, const Vector& upstream) const override;
  std::size_t parameter_count() const override;
  std::vector<double> parameters() const override;
  void set_parameters(std::span<const double> params) override;
  void accumulate_parameter_vjp(const Vector& x, const Vector& upstream,
                                std::span<double> grad) const override;
  std::unique_ptr<Classifier> clone() const override;
  Json weights_json() const override;

 private:
  Vector hidden_preactivation(const Vector& x) const;

  Matrix w1_;
  Vector b1_;
  Matrix w2_;
  Vector b2_;
};

/// grad_x of the loss at x. LossKind::cw differentiates cw_attack_loss,
/// LossKind::cross_entropy differentiates cross_entropy. ReLU subgradient at
/// zero is zero.
Vector input_gradient(const Classifier& model, const Vector& x, LossKind loss,
                      std::size_t true_idx);

/// Bias-corrected ADAM over a flat parameter vector.
struct AdamState {
  AdamState(std::size_t size, double lr, double beta1 = 0.9, double beta2 = 0.999,
            double epsilon = 1e-8);

  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step_count = 0;
  double lr;
  double beta1;
  double beta2;
  double epsilon;
};

/// One ADAM update of `params` in the descent direction of `grads`.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

inline constexpr std::size_t kDefaultBatchSize = 32;

/// Minibatch ADAM on mean cross-entropy over the train split. Each epoch
/// reshuffles the train indices with `rng`.
std::vector<EpochMetrics> train(Classifier& model, const Dataset& data, std::size_t epochs,
                                AdamState& adam, SeededRng& rng,
                                std::size_t batch_size = kDefaultBatchSize);

/// Fraction of `rows` whose predicted class matches the label. An empty row
/// set yields 1.0 and a warning.
double accuracy(const Classifier& model, const Matrix& X, const std::vector<int>& y,
                std::span<const std::size_t> rows);
double accuracy(const Classifier& model, const Matrix& X, const std::vector<int>& y);

void save_model(const Classifier& model, const std::filesystem::path& path,
                const Json& config = Json::object());
std::unique_ptr<Classifier> load_model(const std::filesystem::path& path);
std::unique_ptr<Classifier> model_from_json(const Json& doc);
Json model_to_json(const Classifier& model, const Json& config = Json::object());

}  // namespace semattack

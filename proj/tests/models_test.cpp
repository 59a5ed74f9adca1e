#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "semattack/error.hpp"
#include "semattack/losses.hpp"
#include "semattack/models.hpp"
#include "test_util.hpp"

namespace semattack {
namespace {

using testing::numeric_gradient;
using testing::random_vector;
using testing::relative_error;

TEST(CwLoss, Examples) {
  EXPECT_DOUBLE_EQ(cw_loss(Vector{0.2, 0.8}, 1), 0.0);
  EXPECT_NEAR(cw_loss(Vector{0.2, 0.8}, 0), 0.6, 1e-15);
  EXPECT_DOUBLE_EQ(cw_loss(Vector{3, 1, 2}, 0), 0.0);
}

TEST(CwLoss, AttackHingeIsMirror) {
  EXPECT_NEAR(cw_attack_loss(Vector{0.2, 0.8}, 1), 0.6, 1e-15);
  EXPECT_DOUBLE_EQ(cw_attack_loss(Vector{0.2, 0.8}, 0), 0.0);
  EXPECT_DOUBLE_EQ(cw_attack_loss(Vector{3, 1, 2}, 0), 1.0);
  EXPECT_DOUBLE_EQ(cw_attack_loss(Vector{1, 1}, 0), 0.0);
}

TEST(CwLoss, GradientAtTieStillDescends) {
  const Vector g = cw_attack_loss_grad(Vector{1, 1}, 0);
  EXPECT_EQ(g, (Vector{1, -1}));
  EXPECT_EQ(cw_attack_loss_grad(Vector{0, 2}, 0), (Vector{0, 0}));
}

TEST(Argmax, TiesGoToLowestIndex) {
  EXPECT_EQ(argmax(Vector{1, 1}), 0u);
  EXPECT_EQ(argmax(Vector{0, 2, 2}), 1u);
  EXPECT_EQ(argmax(Vector{-1, 0}), 1u);
}

TEST(Softmax, StableAndNormalized) {
  const Vector p = softmax(Vector{1000, 1000});
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
  EXPECT_NEAR(cross_entropy(Vector{1000, 0}, 0), 0.0, 1e-12);
  EXPECT_NEAR(cross_entropy(Vector{0, 0}, 1), std::log(2.0), 1e-15);
}

TEST(Softmax, CrossEntropyGradientMatchesFiniteDifference) {
  SeededRng rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector z = random_vector(2, rng);
    const std::size_t idx = rng.uniform_index(2);
    const Vector fd = numeric_gradient([&](const Vector& v) { return cross_entropy(v, idx); }, z);
    EXPECT_LT(relative_error(cross_entropy_grad(z, idx), fd), 1e-6);
  }
}

TEST(LossKind, StringRoundTrip) {
  for (LossKind k : {LossKind::cw, LossKind::cross_entropy}) {
    EXPECT_EQ(loss_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(loss_kind_from_string("hinge"), InvalidArgument);
}

TEST(LinearModel, LogitsExample) {
  const LinearModel model(Vector{1, 0});
  EXPECT_EQ(model.logits(Vector{2, 5}), (Vector{2, -2}));
  EXPECT_EQ(model.predict(Vector{2, 5}), 0u);
  EXPECT_EQ(model.predict(Vector{-2, 5}), 1u);
}

TEST(LinearModel, NormalizesAndRejectsZero) {
  const LinearModel model(Vector{3, 4});
  EXPECT_NEAR(norm_l2(model.w_hat()), 1.0, 1e-15);
  EXPECT_THROW(LinearModel(Vector{0, 0}), InvalidArgument);
}

TEST(LinearModel, WrongInputDimensionThrows) {
  const LinearModel model(Vector{1, 0});
  EXPECT_THROW(model.logits(Vector{1, 2, 3}), DimensionMismatch);
}

TwoLayerMlp small_mlp(std::uint64_t seed, std::size_t d = 5, std::size_t h = 7) {
  SeededRng rng(seed);
  auto mlp = TwoLayerMlp::initialize(d, h, rng);
  // Non-zero biases so the bias gradients are exercised.
  std::vector<double> p = mlp.parameters();
  for (double& v : p) v += 0.05 * rng.normal();
  mlp.set_parameters(p);
  return mlp;
}

TEST(TwoLayerMlp, ConstantNetwork) {
  const TwoLayerMlp mlp(Matrix(4, 3), Vector(4), Matrix(2, 4), Vector{0.5, -0.5});
  EXPECT_EQ(mlp.logits(Vector{1, 2, 3}), (Vector{0.5, -0.5}));
  EXPECT_EQ(mlp.input_vjp(Vector{1, 2, 3}, Vector{1, 1}), Vector(3));
}

TEST(TwoLayerMlp, ZeroInputGivesBiasPath) {
  const TwoLayerMlp mlp = small_mlp(3);
  const Vector z = mlp.logits(Vector(5));
  Vector hidden(7);
  for (std::size_t i = 0; i < 7; ++i) hidden[i] = std::max(0.0, mlp.b1()[i]);
  const Vector expected = matvec(mlp.w2(), hidden) + mlp.b2();
  EXPECT_LT(norm_linf(z - expected), 1e-15);
}

TEST(TwoLayerMlp, InputVjpMatchesFiniteDifference) {
  const TwoLayerMlp mlp = small_mlp(4);
  SeededRng rng(8);
  for (int rep = 0; rep < 10; ++rep) {
    const Vector x = random_vector(5, rng);
    const Vector up = random_vector(2, rng);
    const Vector fd = numeric_gradient([&](const Vector& v) { return dot(up, mlp.logits(v)); }, x);
    EXPECT_LT(relative_error(mlp.input_vjp(x, up), fd), 1e-6);
  }
}

TEST(TwoLayerMlp, ParameterVjpMatchesFiniteDifference) {
  TwoLayerMlp mlp = small_mlp(5);
  SeededRng rng(9);
  const Vector x = random_vector(5, rng);
  const Vector up = random_vector(2, rng);
  std::vector<double> grad(mlp.parameter_count(), 0.0);
  mlp.accumulate_parameter_vjp(x, up, grad);

  const std::vector<double> base = mlp.parameters();
  auto objective = [&](const Vector& p) {
    TwoLayerMlp probe = mlp;
    probe.set_parameters(p.span());
    return dot(up, probe.logits(x));
  };
  const Vector fd = numeric_gradient(objective, Vector(base));
  EXPECT_LT(relative_error(Vector(grad), fd), 1e-6);
}

TEST(TwoLayerMlp, ParameterVjpAccumulates) {
  const TwoLayerMlp mlp = small_mlp(6);
  const Vector x{1, 2, 3, 4, 5};
  const Vector up{1, -1};
  std::vector<double> once(mlp.parameter_count(), 0.0), twice(mlp.parameter_count(), 0.0);
  mlp.accumulate_parameter_vjp(x, up, once);
  mlp.accumulate_parameter_vjp(x, up, twice);
  mlp.accumulate_parameter_vjp(x, up, twice);
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_DOUBLE_EQ(twice[i], 2.0 * once[i]);
}

TEST(InputGradient, MatchesFiniteDifferenceForBothLosses) {
  const TwoLayerMlp mlp = small_mlp(7);
  SeededRng rng(10);
  for (LossKind loss : {LossKind::cw, LossKind::cross_entropy}) {
    for (int rep = 0; rep < 10; ++rep) {
      const Vector x = random_vector(5, rng);
      const std::size_t idx = rng.uniform_index(2);
      const Vector fd = numeric_gradient(
          [&](const Vector& v) {
            const Vector z = mlp.logits(v);
            return loss == LossKind::cw ? cw_attack_loss(z, idx) : cross_entropy(z, idx);
          },
          x);
      const Vector g = input_gradient(mlp, x, loss, idx);
      // Skip points on a hinge kink.
      if (loss == LossKind::cw && cw_attack_loss(mlp.logits(x), idx) == 0.0) continue;
      EXPECT_LT(relative_error(g, fd), 1e-6);
    }
  }
}

TEST(Adam, FirstStepMovesByLearningRate) {
  AdamState state(3, 0.01);
  std::vector<double> p{0.0, 1.0, -1.0};
  const std::vector<double> g{2.0, -0.5, 1e-3};
  adam_step(state, p, g);
  EXPECT_NEAR(p[0], -0.01, 1e-8);
  EXPECT_NEAR(p[1], 1.01, 1e-8);
  EXPECT_NEAR(p[2], -1.01, 1e-7);
  EXPECT_EQ(state.step_count, 1u);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  AdamState state(2, 0.1);
  std::vector<double> p{0.3, -0.7};
  adam_step(state, p, std::vector<double>{0.0, 0.0});
  EXPECT_EQ(p, (std::vector<double>{0.3, -0.7}));
}

TEST(Adam, TwoStepRecurrence) {
  const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8, g = 1.5;
  AdamState state(1, lr, b1, b2, eps);
  std::vector<double> p{0.0};
  adam_step(state, p, std::vector<double>{g});
  adam_step(state, p, std::vector<double>{-g});

  double m = 0, v = 0, expected = 0;
  const double grads[2] = {g, -g};
  for (int t = 1; t <= 2; ++t) {
    m = b1 * m + (1 - b1) * grads[t - 1];
    v = b2 * v + (1 - b2) * grads[t - 1] * grads[t - 1];
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    expected -= lr * mh / (std::sqrt(vh) + eps);
  }
  EXPECT_NEAR(p[0], expected, 1e-15);
}

TEST(Adam, SizeMismatchThrows) {
  AdamState state(2, 0.1);
  std::vector<double> p{0.0, 0.0};
  EXPECT_THROW(adam_step(state, p, std::vector<double>{1.0}), DimensionMismatch);
}

Dataset separable_points() {
  Dataset data;
  data.X = Matrix::from_rows({{1.0, 0.0}, {-1.0, 0.0}});
  data.y = {1, -1};
  data.split.train = {0, 1};
  data.split.val = {0, 1};
  data.spec.means = data.X;
  data.spec.class_of_component = data.y;
  return data;
}

TEST(Train, ZeroEpochsLeavesModel) {
  TwoLayerMlp mlp = small_mlp(11, 2, 4);
  const auto before = mlp.parameters();
  AdamState adam(mlp.parameter_count(), 1e-3);
  SeededRng rng(1);
  const auto history = train(mlp, separable_points(), 0, adam, rng);
  EXPECT_TRUE(history.empty());
  EXPECT_EQ(mlp.parameters(), before);
}

TEST(Train, FitsSeparablePoints) {
  SeededRng init(12);
  TwoLayerMlp mlp = TwoLayerMlp::initialize(2, 8, init);
  AdamState adam(mlp.parameter_count(), 0.05);
  SeededRng rng(1);
  const Dataset data = separable_points();
  const auto history = train(mlp, data, 100, adam, rng, 2);
  ASSERT_EQ(history.size(), 100u);
  EXPECT_LT(history.back().train_loss, history.front().train_loss);
  EXPECT_DOUBLE_EQ(accuracy(mlp, data.X, data.y), 1.0);
}

TEST(Train, Deterministic) {
  const Dataset data = separable_points();
  auto run = [&] {
    SeededRng init(13);
    TwoLayerMlp mlp = TwoLayerMlp::initialize(2, 8, init);
    AdamState adam(mlp.parameter_count(), 0.01);
    SeededRng rng(99);
    train(mlp, data, 5, adam, rng, 1);
    return mlp.parameters();
  };
  EXPECT_EQ(run(), run());
}

TEST(Accuracy, EmptyRowSetIsOne) {
  std::vector<std::string> warnings;
  set_warning_sink([&](const std::string& m) { warnings.push_back(m); });
  const LinearModel model(Vector{1, 0});
  const std::vector<std::size_t> none;
  EXPECT_DOUBLE_EQ(accuracy(model, Matrix(0, 2), {}, none), 1.0);
  set_warning_sink(nullptr);
  EXPECT_FALSE(warnings.empty());
}

TEST(Checkpoint, RoundTripPreservesLogits) {
  const auto path = std::filesystem::temp_directory_path() / "semattack_models_test.json";
  const TwoLayerMlp mlp = small_mlp(14);
  save_model(mlp, path, Json{{"note", "test"}});
  const auto back = load_model(path);
  EXPECT_EQ(back->kind(), "mlp");
  EXPECT_EQ(back->parameters(), mlp.parameters());
  const Vector x{0.1, 0.2, 0.3, 0.4, 0.5};
  EXPECT_EQ(back->logits(x), mlp.logits(x));

  const LinearModel lin(Vector{0.6, -0.8});
  save_model(lin, path);
  const auto lin_back = load_model(path);
  EXPECT_EQ(lin_back->kind(), "linear");
  EXPECT_EQ(lin_back->parameters(), lin.parameters());
  std::filesystem::remove(path);
}

TEST(Checkpoint, UnknownKindRejected) {
  EXPECT_THROW(model_from_json(Json{{"kind", "svm"}}), Error);
}

TEST(FitMeanDifference, RecoversDirection) {
  SeededRng rng(15);
  const Vector theta{2.0, 0.0, 0.0};
  const Dataset data = sample_two_component({theta, 0.5}, 2000, rng);
  std::vector<std::size_t> rows(data.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const LinearModel model = LinearModel::fit_mean_difference(data, rows);
  EXPECT_GT(model.w_hat()[0], 0.999);
}

}  // namespace
}  // namespace semattack

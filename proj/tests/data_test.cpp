#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "semattack/data.hpp"
#include "semattack/error.hpp"
#include "semattack/io.hpp"

namespace semattack {
namespace {

namespace fs = std::filesystem;

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("semattack_data_test_" + name);
}

double row_distance(const Matrix& m, std::size_t a, std::size_t b) {
  double s = 0.0;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    const double t = m(a, j) - m(b, j);
    s += t * t;
  }
  return std::sqrt(s);
}

MixtureSpec digit_spec(double sigma) {
  return {load_means(kBuiltinMeans, 100), sigma, default_digit_classes()};
}

TEST(BuiltinMeans, ShapeRangeAndSeparation) {
  const Matrix means = load_means(kBuiltinMeans, 100);
  ASSERT_EQ(means.rows(), 10u);
  ASSERT_EQ(means.cols(), 100u);
  for (double v : means.flat()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  double min_dist = 1e300;
  for (std::size_t a = 0; a < 10; ++a) {
    for (std::size_t b = a + 1; b < 10; ++b) min_dist = std::min(min_dist, row_distance(means, a, b));
  }
  EXPECT_GE(min_dist, 1.0);
  // Regression value of the shipped glyphs.
  EXPECT_NEAR(min_dist, 3.3185809795903087, 1e-12);
}

TEST(BuiltinMeans, DeterministicAndResizable) {
  EXPECT_EQ(load_means(kBuiltinMeans, 100), load_means(kBuiltinMeans, 100));
  const Matrix small = load_means(kBuiltinMeans, 49);
  EXPECT_EQ(small.cols(), 49u);
  EXPECT_THROW(load_means(kBuiltinMeans, 50), InvalidArgument);
}

TEST(FileMeans, IdentityResampleAndValidation) {
  const Matrix builtin = load_means(kBuiltinMeans, 100);
  const fs::path path = temp_path("means.json");
  write_file_atomic(path, Json{{"means", to_json(builtin)}}.dump());
  EXPECT_EQ(load_means(path.string(), 100), builtin);

  const Matrix resized = load_means(path.string(), 36);
  EXPECT_EQ(resized.rows(), 10u);
  EXPECT_EQ(resized.cols(), 36u);
  for (double v : resized.flat()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }

  Matrix nine(9, 100, 0.5);
  write_file_atomic(path, Json{{"means", to_json(nine)}}.dump());
  EXPECT_THROW(load_means(path.string(), 100), InvalidArgument);

  Matrix out_of_range(10, 100, 1.5);
  write_file_atomic(path, Json{{"means", to_json(out_of_range)}}.dump());
  EXPECT_THROW(load_means(path.string(), 100), InvalidArgument);

  EXPECT_THROW(load_means(temp_path("missing.json").string(), 100), IoError);
  fs::remove(path);
}

TEST(SampleDataset, ZeroNoiseRowsAreMeans) {
  const MixtureSpec spec = digit_spec(0.0);
  SeededRng rng(3);
  const Dataset data = sample_dataset(spec, 50, rng);
  for (std::size_t i = 0; i < data.size(); ++i) {
    bool matched = false;
    for (std::size_t c = 0; c < spec.components() && !matched; ++c) {
      bool equal = true;
      for (std::size_t j = 0; j < data.dim(); ++j) equal = equal && data.X(i, j) == spec.means(c, j);
      if (equal) {
        matched = true;
        EXPECT_EQ(data.y[i], spec.class_of_component[c]);
      }
    }
    EXPECT_TRUE(matched) << "row " << i;
  }
}

TEST(SampleDataset, BalanceAndComponentMeans) {
  const MixtureSpec spec = digit_spec(0.5);
  SeededRng rng(17);
  const Dataset data = sample_dataset(spec, 500, rng);
  std::size_t positives = 0;
  for (int y : data.y) positives += y > 0 ? 1 : 0;
  EXPECT_GE(positives, 50u);
  EXPECT_LE(positives, 450u);

  // Assign rows to their nearest mean (the means are > 6 sigma apart).
  std::vector<Vector> sums(10, Vector(100));
  std::vector<std::size_t> counts(10, 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t c = 0; c < 10; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < 100; ++j) s += std::pow(data.X(i, j) - spec.means(c, j), 2);
      if (s < best_d) {
        best_d = s;
        best = c;
      }
    }
    sums[best] += data.sample(i);
    ++counts[best];
    EXPECT_EQ(data.y[i], spec.class_of_component[best]);
  }
  for (std::size_t c = 0; c < 10; ++c) {
    ASSERT_GT(counts[c], 0u);
    const double tol = 5.0 * 0.5 / std::sqrt(static_cast<double>(counts[c]));
    for (std::size_t j = 0; j < 100; ++j) {
      EXPECT_NEAR(sums[c][j] / counts[c], spec.means(c, j), tol);
    }
  }
}

TEST(SampleDataset, DeterministicAndValidated) {
  const MixtureSpec spec = digit_spec(0.5);
  SeededRng a(5), b(5);
  const Dataset da = sample_dataset(spec, 200, a);
  const Dataset db = sample_dataset(spec, 200, b);
  EXPECT_EQ(da.X, db.X);
  EXPECT_EQ(da.y, db.y);
  SeededRng c(1);
  EXPECT_THROW(sample_dataset(spec, 0, c), InvalidArgument);
  MixtureSpec bad = spec;
  bad.class_of_component[0] = 0;
  EXPECT_THROW(sample_dataset(bad, 10, c), InvalidArgument);
}

TEST(MixtureSpec, LargeSigmaWarnsButIsAccepted) {
  std::vector<std::string> warnings;
  set_warning_sink([&](const std::string& m) { warnings.push_back(m); });
  MixtureSpec spec = digit_spec(11.0);
  EXPECT_FALSE(spec.validate());
  set_warning_sink(nullptr);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Split, PartitionSizes) {
  for (std::size_t n : {0, 1, 7, 10, 5000, 5003}) {
    const Split s = make_split(n);
    EXPECT_EQ(s.train.size(), n * 7 / 10);
    EXPECT_EQ(s.val.size(), n * 2 / 10);
    EXPECT_EQ(s.train.size() + s.val.size() + s.test.size(), n);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    all.insert(s.val.begin(), s.val.end());
    all.insert(s.test.begin(), s.test.end());
    EXPECT_EQ(all.size(), n);
  }
}

TEST(TwoComponent, TinySigmaRowsAtPlusMinusTheta) {
  SeededRng rng(2);
  const Dataset data = sample_two_component({Vector{1, 0, 0}, 1e-12}, 4, rng);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(data.X(i, 0), data.y[i], 1e-9);
    EXPECT_NEAR(data.X(i, 1), 0.0, 1e-9);
  }
}

TEST(TwoComponent, MeanOfYXIsTheta) {
  const Vector theta{0.5, -1.0, 2.0};
  const double sigma = 1.0;
  SeededRng rng(77);
  const Dataset data = sample_two_component({theta, sigma}, 100000, rng);
  Vector acc(3);
  for (std::size_t i = 0; i < data.size(); ++i) acc += static_cast<double>(data.y[i]) * data.sample(i);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(acc[j] / data.size(), theta[j], 0.02 * sigma);
}

TEST(TwoComponent, EmptyIsValid) {
  SeededRng rng(1);
  const Dataset data = sample_two_component({Vector{1, 2}, 1.0}, 0, rng);
  EXPECT_EQ(data.size(), 0u);
  EXPECT_EQ(data.X.cols(), 2u);
}

TEST(DatasetIo, RoundTripIsBitExact) {
  SeededRng rng(9);
  const Dataset data = sample_dataset(digit_spec(0.5), 120, rng);
  const fs::path path = temp_path("dataset.json");
  save_dataset(data, path);
  const Dataset back = load_dataset(path);
  EXPECT_EQ(back.X, data.X);
  EXPECT_EQ(back.y, data.y);
  EXPECT_EQ(back.split, data.split);
  EXPECT_EQ(back.spec.means, data.spec.means);
  EXPECT_EQ(back.seed, data.seed);
  fs::remove(path);
}

TEST(Labels, IndexEncoding) {
  EXPECT_EQ(label_to_index(1), 0u);
  EXPECT_EQ(label_to_index(-1), 1u);
  EXPECT_EQ(index_to_label(0), 1);
  EXPECT_EQ(index_to_label(1), -1);
}

}  // namespace
}  // namespace semattack

#include "semattack/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "semattack/error.hpp"
#include "semattack/image.hpp"
#include "semattack/io.hpp"

namespace semattack {

namespace {

// 5x7 dot-matrix digit font, one string per row, '#' = ink.
constexpr std::size_t kFontRows = 7;
constexpr std::size_t kFontCols = 5;
constexpr std::array<std::array<const char*, kFontRows>, 10> kFont{{
    {".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."},
    {"..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."},
    {".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"},
    {"#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."},
    {"...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."},
    {"#####", "#....", "####.", "....#", "....#", "#...#", ".###."},
    {"..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."},
    {"#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."},
    {".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."},
    {".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."},
}};

constexpr std::uint64_t kGlyphSeed = 0x5eed0d16175ULL;
constexpr std::size_t kSupersample = 8;

// Box-filters the font glyph onto a side x side grid; each digit gets a
// seeded stroke intensity in [0.85, 1].
Matrix render_builtin_means(std::size_t side) {
  SeededRng rng(kGlyphSeed);
  Matrix means(kDigitCount, side * side);
  const double cells = static_cast<double>(side * kSupersample);
  for (std::size_t digit = 0; digit < kDigitCount; ++digit) {
    const double intensity = rng.uniform(0.85, 1.0);
    auto row = means.row(digit);
    for (std::size_t r = 0; r < side; ++r) {
      for (std::size_t c = 0; c < side; ++c) {
        std::size_t ink = 0;
        for (std::size_t a = 0; a < kSupersample; ++a) {
          for (std::size_t b = 0; b < kSupersample; ++b) {
            const double y = (static_cast<double>(r * kSupersample + a) + 0.5) / cells;
            const double x = (static_cast<double>(c * kSupersample + b) + 0.5) / cells;
            const auto fr = std::min(kFontRows - 1, static_cast<std::size_t>(y * kFontRows));
            const auto fc = std::min(kFontCols - 1, static_cast<std::size_t>(x * kFontCols));
            if (kFont[digit][fr][fc] == '#') ++ink;
          }
        }
        row[r * side + c] =
            intensity * static_cast<double>(ink) / static_cast<double>(kSupersample * kSupersample);
      }
    }
  }
  return means;
}

}  // namespace

bool MixtureSpec::validate() const {
  if (means.rows() < 1) throw InvalidArgument("mixture needs at least one component");
  if (class_of_component.size() != means.rows()) {
    throw DimensionMismatch("class_of_component length differs from component count");
  }
  for (int label : class_of_component) {
    if (label != 1 && label != -1) throw InvalidArgument("component labels must be +1 or -1");
  }
  if (!(sigma >= 0.0)) throw InvalidArgument("sigma must be >= 0");
  if (!all_finite(means.flat())) throw InvalidArgument("non-finite component mean");
  if (sigma > std::sqrt(static_cast<double>(dim()))) {
    warn("sigma exceeds sqrt(d)");
    return false;
  }
  return true;
}

MixtureSpec TwoComponentSpec::as_mixture() const {
  if (!(sigma > 0.0)) throw InvalidArgument("two-component sigma must be > 0");
  if (!all_finite(theta_star.span())) throw InvalidArgument("non-finite theta_star");
  MixtureSpec spec;
  spec.means = Matrix(2, theta_star.size());
  spec.means.set_row(0, theta_star.span());
  spec.means.set_row(1, (-theta_star).span());
  spec.sigma = sigma;
  spec.class_of_component = {1, -1};
  return spec;
}

Split make_split(std::size_t n) {
  const std::size_t n_train = n * 7 / 10;
  const std::size_t n_val = n * 2 / 10;
  Split split;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < n_train) {
      split.train.push_back(i);
    } else if (i < n_train + n_val) {
      split.val.push_back(i);
    } else {
      split.test.push_back(i);
    }
  }
  return split;
}

std::vector<int> default_digit_classes() { return {1, 1, 1, 1, 1, -1, -1, -1, -1, -1}; }

Matrix load_means(const std::string& source, std::size_t d_target) {
  const std::size_t side = square_side(d_target);
  if (source == kBuiltinMeans) return render_builtin_means(side);

  const Json doc = read_json_file(source);
  if (!doc.contains("means")) throw IoError(source + ": missing \"means\"");
  const Matrix raw = matrix_from_json(doc.at("means"));
  if (raw.rows() != kDigitCount) {
    throw InvalidArgument(source + ": expected 10 means, found " + std::to_string(raw.rows()));
  }
  for (double v : raw.flat()) {
    if (v < 0.0 || v > 1.0) throw InvalidArgument(source + ": mean values must lie in [0, 1]");
  }
  const std::size_t side_in = square_side(raw.cols());
  Matrix out(kDigitCount, d_target);
  for (std::size_t r = 0; r < kDigitCount; ++r) {
    out.set_row(r, resize_bilinear(raw.row(r), side_in, side));
  }
  return out;
}

Dataset sample_dataset(const MixtureSpec& spec, std::size_t n, SeededRng& rng) {
  spec.validate();
  if (n < 1) throw InvalidArgument("sample_dataset: n must be >= 1");
  Dataset data;
  data.spec = spec;
  data.seed = rng.seed();
  data.X = Matrix(n, spec.dim());
  data.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t comp = rng.uniform_index(spec.components());
    auto row = data.X.row(i);
    auto mean = spec.means.row(comp);
    for (std::size_t j = 0; j < row.size(); ++j) {
      row[j] = spec.sigma == 0.0 ? mean[j] : mean[j] + spec.sigma * rng.normal();
    }
    data.y[i] = spec.class_of_component[comp];
  }
  data.split = make_split(n);
  return data;
}

Dataset sample_two_component(const TwoComponentSpec& spec, std::size_t n, SeededRng& rng) {
  MixtureSpec mixture = spec.as_mixture();
  if (n == 0) {
    Dataset empty;
    empty.spec = std::move(mixture);
    empty.seed = rng.seed();
    empty.X = Matrix(0, spec.theta_star.size());
    return empty;
  }
  return sample_dataset(mixture, n, rng);
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  Json doc;
  doc["d"] = data.dim();
  doc["n"] = data.size();
  doc["sigma"] = data.spec.sigma;
  doc["means"] = to_json(data.spec.means);
  doc["class_of_component"] = data.spec.class_of_component;
  doc["X"] = to_json(data.X);
  doc["y"] = data.y;
  doc["split"] = {{"train", data.split.train}, {"val", data.split.val}, {"test", data.split.test}};
  doc["seed"] = data.seed;
  write_file_atomic(path, doc.dump());
}

Dataset load_dataset(const std::filesystem::path& path) {
  const Json doc = read_json_file(path);
  try {
    Dataset data;
    data.spec.means = matrix_from_json(doc.at("means"));
    data.spec.sigma = doc.at("sigma").get<double>();
    data.spec.class_of_component = doc.at("class_of_component").get<std::vector<int>>();
    data.y = doc.at("y").get<std::vector<int>>();
    const auto d = doc.at("d").get<std::size_t>();
    data.X = data.y.empty() ? Matrix(0, d) : matrix_from_json(doc.at("X"));
    const auto& split = doc.at("split");
    data.split.train = split.at("train").get<std::vector<std::size_t>>();
    data.split.val = split.at("val").get<std::vector<std::size_t>>();
    data.split.test = split.at("test").get<std::vector<std::size_t>>();
    data.seed = doc.at("seed").get<std::uint64_t>();
    if (data.X.rows() != data.y.size() || data.X.cols() != d || data.spec.dim() != d) {
      throw IoError(path.string() + ": inconsistent dataset dimensions");
    }
    return data;
  } catch (const Json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace semattack

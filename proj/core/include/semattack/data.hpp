#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "semattack/rng.hpp"
#include "semattack/tensor.hpp"

namespace semattack {

/// Mixture of isotropic Gaussians with one binary label per component.
struct MixtureSpec {
  Matrix means;  // m x d
  double sigma = 0.5;
  std::vector<int> class_of_component;  // +1 / -1

  std::size_t dim() const noexcept { return means.cols(); }
  std::size_t components() const noexcept { return means.rows(); }

  /// Throws on structural violations. Returns false (without throwing) when
  /// sigma exceeds sqrt(d), which is only a warning.
  bool validate() const;
};

/// Symmetric two-component model with means +theta_star (label +1) and
/// -theta_star (label -1).
struct TwoComponentSpec {
  Vector theta_star;
  double sigma = 1.0;

  MixtureSpec as_mixture() const;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;

  bool operator==(const Split&) const = default;
};

/// Contiguous 70/20/10 split: floor(0.7n), floor(0.2n), remainder.
Split make_split(std::size_t n);

struct Dataset {
  Matrix X;  // n x d
  std::vector<int> y;
  Split split;
  MixtureSpec spec;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return y.size(); }
  std::size_t dim() const noexcept { return spec.dim(); }
  Vector sample(std::size_t i) const { return X.row_vector(i); }
};

/// Class encoding used at the model boundary: +1 -> 0, -1 -> 1.
inline std::size_t label_to_index(int label) { return label > 0 ? 0 : 1; }
inline int index_to_label(std::size_t index) { return index == 0 ? 1 : -1; }

inline constexpr const char* kBuiltinMeans = "builtin";
inline constexpr std::size_t kDigitCount = 10;

/// Ten component means of dimension d_target (a perfect square).
///
/// `source` is either kBuiltinMeans, which renders 5x7 dot-matrix glyphs of
/// the digits 0-9 with a fixed jitter seed, or a path to a JSON document
/// with a "means" array of ten square images in [0, 1], bilinearly resampled
/// to sqrt(d_target) x sqrt(d_target).
Matrix load_means(const std::string& source, std::size_t d_target);

/// Digits 0-4 -> +1, digits 5-9 -> -1.
std::vector<int> default_digit_classes();

Dataset sample_dataset(const MixtureSpec& spec, std::size_t n, SeededRng& rng);
Dataset sample_two_component(const TwoComponentSpec& spec, std::size_t n, SeededRng& rng);

void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace semattack

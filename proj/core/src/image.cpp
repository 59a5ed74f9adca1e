#include "semattack/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "semattack/error.hpp"

namespace semattack {

std::size_t square_side(std::size_t pixels) {
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(pixels))));
  if (side * side != pixels || side == 0) {
    throw InvalidArgument("dimension " + std::to_string(pixels) + " is not a square image");
  }
  return side;
}

double bilinear_sample(std::span<const double> image, std::size_t side, double row, double col) {
  const double r0f = std::floor(row);
  const double c0f = std::floor(col);
  const double fr = row - r0f;
  const double fc = col - c0f;
  const auto n = static_cast<long long>(side);
  const auto r0 = static_cast<long long>(r0f);
  const auto c0 = static_cast<long long>(c0f);

  auto at = [&](long long r, long long c) -> double {
    if (r < 0 || c < 0 || r >= n || c >= n) return 0.0;
    return image[static_cast<std::size_t>(r * n + c)];
  };

  if (fr == 0.0 && fc == 0.0) return at(r0, c0);
  return (1.0 - fr) * ((1.0 - fc) * at(r0, c0) + fc * at(r0, c0 + 1)) +
         fr * ((1.0 - fc) * at(r0 + 1, c0) + fc * at(r0 + 1, c0 + 1));
}

std::vector<double> resize_bilinear(std::span<const double> image, std::size_t side_in,
                                    std::size_t side_out) {
  if (side_in == side_out) return {image.begin(), image.end()};
  std::vector<double> out(side_out * side_out);
  const double scale = static_cast<double>(side_in) / static_cast<double>(side_out);
  const double last = static_cast<double>(side_in - 1);
  for (std::size_t r = 0; r < side_out; ++r) {
    for (std::size_t c = 0; c < side_out; ++c) {
      // Clamp to the valid area so borders replicate instead of fading to zero.
      const double sr = std::clamp((static_cast<double>(r) + 0.5) * scale - 0.5, 0.0, last);
      const double sc = std::clamp((static_cast<double>(c) + 0.5) * scale - 0.5, 0.0, last);
      out[r * side_out + c] = bilinear_sample(image, side_in, sr, sc);
    }
  }
  return out;
}

}  // namespace semattack

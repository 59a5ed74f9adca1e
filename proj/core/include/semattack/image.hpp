#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace semattack {

/// Side length of a square image with `pixels` entries; throws
/// InvalidArgument when `pixels` is not a perfect square.
std::size_t square_side(std::size_t pixels);

/// Bilinear sample of a row-major side x side image at fractional
/// (row, col); pixels outside the image read as zero. Integer coordinates
/// return the stored value exactly.
double bilinear_sample(std::span<const double> image, std::size_t side, double row, double col);

/// Bilinear resize between square images using pixel-center alignment, so
/// resizing to the same side is the identity.
std::vector<double> resize_bilinear(std::span<const double> image, std::size_t side_in,
                                    std::size_t side_out);

}  // namespace semattack

#pragma once

#include <span>

#include "ctis/cube.hpp"

namespace ctis {

/// Peak value used by psnr. Fixed: cubes are scaled to 8-bit range.
inline constexpr double kPsnrPeak = 255.0;

/// Mean squared voxel difference. Throws DimensionError on shape mismatch.
double mse(const HyperCube& a, const HyperCube& b);
double mse(std::span<const double> a, std::span<const double> b);

/// 10 log10(255^2 / mse) in dB; +infinity for mse == 0. Throws ValueError for
/// negative or NaN input.
double psnr(double mse);

}  // namespace ctis

#pragma once

// Direct CTIS forward model: the zeroth order plus four or eight first-order
// diffraction spots, sensitivity weighting, Gaussian PSF and additive noise.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ctis/cube.hpp"

namespace ctis {

/// Direction of one diffraction order in (row, col); (0, 0) is the zeroth order.
struct OrderVector {
  int di = 0;
  int dj = 0;

  [[nodiscard]] bool is_zeroth() const { return di == 0 && dj == 0; }
  [[nodiscard]] bool is_diagonal() const { return di != 0 && dj != 0; }
  friend bool operator==(const OrderVector&, const OrderVector&) = default;
};

struct GeometryParams {
  std::size_t x = 100;  // zeroth-order width (cube width)
  std::size_t y = 100;  // zeroth-order height (cube height)
  std::size_t z = 25;   // spectral channels
  std::size_t b1 = 27;  // gap between zeroth and first orders
  std::size_t b2 = 0;   // gap between first orders and the border
  std::size_t shift = 2;  // dispersion, pixels per channel
  bool all_orders = true;

  /// Throws ValueError when x != y, z == 0, x == 0 or shift == 0.
  void validate() const;
  [[nodiscard]] CubeShape cube_shape() const { return {y, x, z}; }
  [[nodiscard]] std::size_t voxels() const { return x * y * z; }
  friend bool operator==(const GeometryParams&, const GeometryParams&) = default;
};

/// Diffraction orders in the row order used by OpticalParams::diff_sens:
/// row-major over di, then dj, in {-1, 0, 1}. Nine entries with all_orders,
/// otherwise the five non-diagonal ones.
std::vector<OrderVector> diffraction_orders(bool all_orders);
std::size_t order_count(bool all_orders);

struct OpticalParams {
  /// orders x z, row-major; row s corresponds to diffraction_orders()[s].
  std::vector<double> diff_sens;
  std::size_t orders = 9;
  std::vector<double> illum;  // length z
  double sigma_psf = 1.04;
  double noise_sigma = 0.0;

  /// Unit sensitivities and illumination.
  static OpticalParams uniform(const GeometryParams& geom, double sigma_psf = 0.0,
                               double noise_sigma = 0.0);

  [[nodiscard]] double sensitivity(std::size_t order, std::size_t channel) const {
    return diff_sens[order * illum.size() + channel];
  }
  /// diff_sens[s][k] * illum[k], the weight applied to channel k in order s.
  [[nodiscard]] double weight(std::size_t order, std::size_t channel) const {
    return sensitivity(order, channel) * illum[channel];
  }
  void validate(const GeometryParams& geom) const;
};

struct PixelPos {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const PixelPos&, const PixelPos&) = default;
};

/// Side q of the square canvas: x + 2*b1 + 2*b2 + 2*(x + shift*(z-1)).
std::size_t image_side(const GeometryParams& geom);

/// Top-left corner of channel `channel`'s y-by-x sub-image within `order`'s spot.
/// Channel 0 sits next to the zeroth order; channel k moves outward by
/// shift*k along every non-zero axis of the order vector.
PixelPos spot_origin(const GeometryParams& geom, OrderVector order, std::size_t channel);

struct SpotBox {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t height = 0;
  std::size_t width = 0;
};

/// Bounding box covering every channel of one order's spot.
SpotBox spot_box(const GeometryParams& geom, OrderVector order);

/// Noiseless, pre-PSF projection of the cube onto the canvas.
CtisImage project(const HyperCube& cube, const GeometryParams& geom, const OpticalParams& optics);
std::vector<double> project_values(std::span<const double> cube, const GeometryParams& geom,
                                   const OpticalParams& optics);

/// Normalised 1-D Gaussian taps, radius ceil(4*sigma). sigma == 0 gives {1}.
std::vector<double> gaussian_kernel(double sigma);
std::size_t kernel_radius(double sigma);

/// Separable zero-padded convolution of a side x side image with the
/// Gaussian PSF. sigma == 0 is the identity.
CtisImage convolve_psf(const CtisImage& image, double sigma_psf);
std::vector<double> convolve_psf_values(std::span<const double> image, std::size_t side,
                                        double sigma_psf);

/// Adds independent N(0, sigma^2) noise per pixel and clamps negatives to 0.
/// Deterministic for a fixed seed.
CtisImage add_noise(const CtisImage& image, double noise_sigma, std::uint64_t seed);
std::vector<double> add_noise_values(std::span<const double> image, double noise_sigma,
                                     std::uint64_t seed);

/// add_noise(convolve_psf(project(cube))).
CtisImage simulate(const HyperCube& cube, const GeometryParams& geom, const OpticalParams& optics,
                   std::uint64_t seed);

}  // namespace ctis

#include "ctis/simulator.hpp"

#include <cmath>
#include <random>
#include <string>

#include "ctis/error.hpp"
#include "ctis/parallel.hpp"

namespace ctis {
namespace {

// Origin along one axis for an order component `d` in {-1, 0, 1}.
std::size_t axis_origin(const GeometryParams& g, std::size_t extent, int d, std::size_t channel) {
  const std::size_t dispersed = extent + g.shift * (g.z - 1);
  const std::size_t centre = g.b2 + dispersed + g.b1;
  if (d == 0) return centre;
  if (d > 0) return centre + extent + g.b1 + g.shift * channel;
  return centre - g.b1 - extent - g.shift * channel;
}

}  // namespace

void GeometryParams::validate() const {
  if (x == 0 || y == 0) throw ValueError("geometry: x and y must be >= 1");
  if (x != y) throw ValueError("geometry: only square zeroth orders are supported (x == y)");
  if (z == 0) throw ValueError("geometry: z must be >= 1");
  if (shift == 0) throw ValueError("geometry: shift must be >= 1");
}

std::vector<OrderVector> diffraction_orders(bool all_orders) {
  std::vector<OrderVector> out;
  for (int di = -1; di <= 1; ++di) {
    for (int dj = -1; dj <= 1; ++dj) {
      if (!all_orders && di != 0 && dj != 0) continue;
      out.push_back({di, dj});
    }
  }
  return out;
}

std::size_t order_count(bool all_orders) { return all_orders ? 9 : 5; }

OpticalParams OpticalParams::uniform(const GeometryParams& geom, double sigma_psf,
                                     double noise_sigma) {
  OpticalParams o;
  o.orders = order_count(geom.all_orders);
  o.diff_sens.assign(o.orders * geom.z, 1.0);
  o.illum.assign(geom.z, 1.0);
  o.sigma_psf = sigma_psf;
  o.noise_sigma = noise_sigma;
  return o;
}

void OpticalParams::validate(const GeometryParams& geom) const {
  const std::size_t expected_orders = order_count(geom.all_orders);
  if (orders != expected_orders) throw_dimension("optics: diffraction order rows", expected_orders, orders);
  if (illum.size() != geom.z) throw_dimension("optics: illumination length", geom.z, illum.size());
  if (diff_sens.size() != orders * geom.z) {
    throw_dimension("optics: diff_sens entries", orders * geom.z, diff_sens.size());
  }
  for (double v : diff_sens) {
    if (!std::isfinite(v) || v < 0.0) throw ValueError("optics: diff_sens entries must be >= 0");
  }
  for (double v : illum) {
    if (!std::isfinite(v) || v < 0.0) throw ValueError("optics: illum entries must be >= 0");
  }
  if (!std::isfinite(sigma_psf) || sigma_psf < 0.0) throw ValueError("optics: sigma_psf must be >= 0");
  if (!std::isfinite(noise_sigma) || noise_sigma < 0.0) {
    throw ValueError("optics: noise sigma must be >= 0");
  }
}

std::size_t image_side(const GeometryParams& geom) {
  geom.validate();
  return geom.x + 2 * geom.b1 + 2 * geom.b2 + 2 * (geom.x + geom.shift * (geom.z - 1));
}

PixelPos spot_origin(const GeometryParams& geom, OrderVector order, std::size_t channel) {
  geom.validate();
  if (channel >= geom.z) {
    throw ValueError("spot_origin: channel " + std::to_string(channel) + " out of range [0, " +
                     std::to_string(geom.z) + ")");
  }
  return {axis_origin(geom, geom.y, order.di, channel), axis_origin(geom, geom.x, order.dj, channel)};
}

SpotBox spot_box(const GeometryParams& geom, OrderVector order) {
  const PixelPos first = spot_origin(geom, order, 0);
  const PixelPos last = spot_origin(geom, order, geom.z - 1);
  SpotBox box;
  box.row = std::min(first.row, last.row);
  box.col = std::min(first.col, last.col);
  box.height = std::max(first.row, last.row) - box.row + geom.y;
  box.width = std::max(first.col, last.col) - box.col + geom.x;
  return box;
}

std::vector<double> project_values(std::span<const double> cube, const GeometryParams& geom,
                                   const OpticalParams& optics) {
  geom.validate();
  optics.validate(geom);
  if (cube.size() != geom.voxels()) throw_dimension("project: cube voxels", geom.voxels(), cube.size());
  const std::size_t q = image_side(geom);
  const CubeShape shape = geom.cube_shape();
  const auto orders = diffraction_orders(geom.all_orders);
  std::vector<double> canvas(q * q, 0.0);
  for (std::size_t s = 0; s < orders.size(); ++s) {
    for (std::size_t k = 0; k < geom.z; ++k) {
      const double w = optics.weight(s, k);
      if (w == 0.0) continue;
      const PixelPos o = spot_origin(geom, orders[s], k);
      for (std::size_t r = 0; r < shape.height; ++r) {
        double* dst = canvas.data() + (o.row + r) * q + o.col;
        const double* src = cube.data() + shape.index(r, 0, k);
        for (std::size_t c = 0; c < shape.width; ++c) dst[c] += w * src[c * shape.channels];
      }
    }
  }
  return canvas;
}

CtisImage project(const HyperCube& cube, const GeometryParams& geom, const OpticalParams& optics) {
  if (cube.shape() != geom.cube_shape()) {
    throw DimensionError("project: cube is " + std::to_string(cube.height()) + "x" +
                         std::to_string(cube.width()) + "x" + std::to_string(cube.channels()) +
                         ", geometry expects " + std::to_string(geom.y) + "x" +
                         std::to_string(geom.x) + "x" + std::to_string(geom.z));
  }
  const auto values = cube.to_doubles();
  return CtisImage::from_doubles(image_side(geom), project_values(values, geom, optics));
}

std::size_t kernel_radius(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValueError("PSF sigma must be finite and >= 0");
  return static_cast<std::size_t>(std::ceil(4.0 * sigma));
}

std::vector<double> gaussian_kernel(double sigma) {
  const std::size_t radius = kernel_radius(sigma);
  if (radius == 0) return {1.0};
  std::vector<double> taps(2 * radius + 1);
  double total = 0.0;
  for (std::size_t i = 0; i < taps.size(); ++i) {
    const double d = static_cast<double>(i) - static_cast<double>(radius);
    taps[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += taps[i];
  }
  for (double& t : taps) t /= total;
  return taps;
}

std::vector<double> convolve_psf_values(std::span<const double> image, std::size_t side,
                                        double sigma_psf) {
  if (image.size() != side * side) throw_dimension("convolve_psf: pixels", side * side, image.size());
  const auto taps = gaussian_kernel(sigma_psf);
  if (taps.size() == 1) return std::vector<double>(image.begin(), image.end());
  const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const auto n = static_cast<std::ptrdiff_t>(side);

  std::vector<double> horizontal(side * side, 0.0);
  parallel_for(side, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t r = begin; r < end; ++r) {
      const double* src = image.data() + r * side;
      double* dst = horizontal.data() + r * side;
      for (std::ptrdiff_t c = 0; c < n; ++c) {
        double acc = 0.0;
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, c - radius);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, c + radius);
        for (std::ptrdiff_t j = lo; j <= hi; ++j) acc += taps[j - c + radius] * src[j];
        dst[c] = acc;
      }
    }
  });

  std::vector<double> out(side * side, 0.0);
  parallel_for(side, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t r = begin; r < end; ++r) {
      const auto row = static_cast<std::ptrdiff_t>(r);
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, row - radius);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, row + radius);
      double* dst = out.data() + r * side;
      for (std::ptrdiff_t i = lo; i <= hi; ++i) {
        const double t = taps[i - row + radius];
        const double* src = horizontal.data() + static_cast<std::size_t>(i) * side;
        for (std::size_t c = 0; c < side; ++c) dst[c] += t * src[c];
      }
    }
  });
  return out;
}

CtisImage convolve_psf(const CtisImage& image, double sigma_psf) {
  if (sigma_psf == 0.0) return image;
  const auto values = image.to_doubles();
  return CtisImage::from_doubles(image.side(), convolve_psf_values(values, image.side(), sigma_psf));
}

std::vector<double> add_noise_values(std::span<const double> image, double noise_sigma,
                                     std::uint64_t seed) {
  if (!std::isfinite(noise_sigma) || noise_sigma < 0.0) throw ValueError("noise sigma must be >= 0");
  std::vector<double> out(image.begin(), image.end());
  if (noise_sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, noise_sigma);
  for (double& v : out) v = std::max(0.0, v + normal(rng));
  return out;
}

CtisImage add_noise(const CtisImage& image, double noise_sigma, std::uint64_t seed) {
  if (noise_sigma == 0.0) return image;
  const auto values = image.to_doubles();
  return CtisImage::from_doubles(image.side(), add_noise_values(values, noise_sigma, seed));
}

CtisImage simulate(const HyperCube& cube, const GeometryParams& geom, const OpticalParams& optics,
                   std::uint64_t seed) {
  if (cube.shape() != geom.cube_shape()) throw DimensionError("simulate: cube does not match geometry");
  const auto values = cube.to_doubles();
  const std::size_t q = image_side(geom);
  auto canvas = project_values(values, geom, optics);
  canvas = convolve_psf_values(canvas, q, optics.sigma_psf);
  canvas = add_noise_values(canvas, optics.noise_sigma, seed);
  return CtisImage::from_doubles(q, canvas);
}

}  // namespace ctis

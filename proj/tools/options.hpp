#pragma once

// Flag groups shared by several commands.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ctis/simulator.hpp"

namespace ctis::tools {

struct GeometryFlags {
  std::optional<std::size_t> x;
  std::optional<std::size_t> y;
  std::optional<std::size_t> z;
  std::size_t b1 = 27;
  std::size_t b2 = 0;
  std::size_t shift = 2;
  bool all_orders = true;

  /// Missing x/y/z fall back to `fallback` (typically a cube's shape).
  [[nodiscard]] GeometryParams resolve(const CubeShape& fallback) const;
};

struct OpticsFlags {
  double sigma_psf = 1.04;
  double noise = 0.44;
  std::string sens_path;
  std::string illum_path;
  double wl_min = 400.0;
  double wl_max = 750.0;

  /// Unit sensitivities and illumination unless CSV files were given; those
  /// are resampled at the z channel-centre wavelengths over [wl_min, wl_max].
  [[nodiscard]] OpticalParams resolve(const GeometryParams& geom) const;
};

void add_geometry_flags(CLI::App& app, GeometryFlags& flags, bool with_cube_dims = true);
void add_optics_flags(CLI::App& app, OpticsFlags& flags, bool with_noise = true);
void add_threads_flag(CLI::App& app, std::size_t& threads);

}  // namespace ctis::tools

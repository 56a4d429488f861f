#include "options.hpp"

#include <vector>

#include "ctis/calib.hpp"
#include "ctis/error.hpp"
#include "ctis/spectral.hpp"

namespace ctis::tools {

GeometryParams GeometryFlags::resolve(const CubeShape& fallback) const {
  GeometryParams g;
  g.x = x.value_or(fallback.width);
  g.y = y.value_or(fallback.height);
  g.z = z.value_or(fallback.channels);
  g.b1 = b1;
  g.b2 = b2;
  g.shift = shift;
  g.all_orders = all_orders;
  g.validate();
  return g;
}

OpticalParams OpticsFlags::resolve(const GeometryParams& geom) const {
  auto optics = OpticalParams::uniform(geom, sigma_psf, noise);
  if (!sens_path.empty() || !illum_path.empty()) {
    const auto wavelengths = channel_wavelengths(wl_min, wl_max, geom.z);
    if (!sens_path.empty()) {
      const auto table = read_sensitivity_csv(sens_path);
      if (table.orders() != optics.orders) {
        throw DimensionError(sens_path + ": " + std::to_string(table.orders()) + " orders, geometry uses " +
                             std::to_string(optics.orders));
      }
      optics.diff_sens = interpolate_sensitivity(table, wavelengths);
    }
    if (!illum_path.empty()) optics.illum = read_spectrum_csv(illum_path).resample(wavelengths);
  }
  optics.validate(geom);
  return optics;
}

void add_geometry_flags(CLI::App& app, GeometryFlags& flags, bool with_cube_dims) {
  if (with_cube_dims) {
    app.add_option("--x", flags.x, "Zeroth-order width");
    app.add_option("--y", flags.y, "Zeroth-order height");
    app.add_option("--z", flags.z, "Spectral channels");
  }
  app.add_option("--b1", flags.b1, "Gap between zeroth and first orders")->capture_default_str();
  app.add_option("--b2", flags.b2, "Gap between first orders and the border")->capture_default_str();
  app.add_option("--shift", flags.shift, "Dispersion in pixels per channel")->capture_default_str();
  app.add_option("--all-orders", flags.all_orders, "Eight first orders (true) or four (false)")
      ->capture_default_str();
}

void add_optics_flags(CLI::App& app, OpticsFlags& flags, bool with_noise) {
  app.add_option("--sigma-psf", flags.sigma_psf, "Gaussian PSF sigma in pixels")->capture_default_str();
  if (with_noise) {
    app.add_option("--noise", flags.noise, "Additive Gaussian noise sigma")->capture_default_str();
  }
  app.add_option("--sens", flags.sens_path, "Diffraction sensitivity CSV (wavelength_nm,s0,...)");
  app.add_option("--illum", flags.illum_path, "Illumination spectrum CSV (wavelength_nm,value)");
  app.add_option("--wl-min", flags.wl_min, "Wavelength of channel 0 in nm")->capture_default_str();
  app.add_option("--wl-max", flags.wl_max, "Wavelength of the last channel in nm")->capture_default_str();
}

void add_threads_flag(CLI::App& app, std::size_t& threads) {
  app.add_option("--threads", threads, "Worker thread cap (0 = hardware concurrency)")->capture_default_str();
}

}  // namespace ctis::tools

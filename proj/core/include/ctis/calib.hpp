#pragma once

// Optical calibration: slanted-edge PSF width, per-order diffraction
// sensitivity from monochromator frames, and blackbody fits of the
// illuminant spectrum.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ctis/cube.hpp"
#include "ctis/spectral.hpp"

namespace ctis {

/// Axis-aligned pixel rectangle.
struct Roi {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t height = 0;
  std::size_t width = 0;
};

struct GaussianFit {
  double amplitude = 0.0;
  double mean = 0.0;  // pixels, image column coordinate
  double sigma = 0.0;  // pixels
  double r_squared = 0.0;
};

/// Edge spread and line spread profiles across a (near-)vertical edge.
struct EdgeProfile {
  std::vector<double> esf;  // per-column mean over the ROI rows
  std::vector<double> lsf;  // esf[i+1] - esf[i], i.e. the derivative at i + 1/2
  std::vector<double> lsf_positions;  // image column of each lsf sample
};

EdgeProfile edge_profile(const CtisImage& image, const Roi& roi);

/// Least-squares fit of a * exp(-(x - mean)^2 / (2 sigma^2)) to (x, y).
/// sigma is searched on a coarse grid over [0.2, 10] pixels and refined by
/// golden section; amplitude and mean are optimised for every candidate sigma.
GaussianFit fit_gaussian(std::span<const double> x, std::span<const double> y);

/// Slanted-edge PSF estimate: fits a Gaussian to |LSF| of the ROI's edge.
/// Throws ValueError when the ROI holds no detectable edge or leaves the image.
GaussianFit estimate_psf(const CtisImage& image, const Roi& roi);

/// S(lambda, s) for every diffraction order s and measured wavelength.
class SensitivityTable {
 public:
  SensitivityTable(std::vector<double> wavelengths_nm, std::size_t orders, std::vector<double> values);

  [[nodiscard]] std::span<const double> wavelengths() const { return wavelengths_; }
  [[nodiscard]] std::size_t orders() const { return orders_; }
  [[nodiscard]] std::size_t samples() const { return wavelengths_.size(); }
  [[nodiscard]] double at(std::size_t order, std::size_t sample) const {
    return values_[order * wavelengths_.size() + sample];
  }
  /// Row of one order across all wavelengths.
  [[nodiscard]] std::span<const double> order_row(std::size_t order) const {
    return std::span<const double>(values_).subspan(order * wavelengths_.size(), wavelengths_.size());
  }
  [[nodiscard]] std::span<const double> values() const { return values_; }

 private:
  std::vector<double> wavelengths_;
  std::size_t orders_;
  std::vector<double> values_;  // orders x samples, row-major
};

/// S = PC / (t * G * C), elementwise. `photon_counts` is orders x wavelengths,
/// row-major; exposures are in microseconds.
SensitivityTable diffraction_sensitivity(std::vector<double> wavelengths_nm,
                                         std::span<const double> photon_counts,
                                         std::span<const double> exposures_us,
                                         std::span<const double> gains,
                                         std::span<const double> corrections);

/// Dark-subtracted spot volume: sum over the box of max(image - dark, 0).
double spot_photon_count(const CtisImage& image, const CtisImage& dark, const Roi& box);

/// Per-order linear interpolation to `targets_nm`; returns orders x targets,
/// row-major (the layout of OpticalParams::diff_sens). No extrapolation.
std::vector<double> interpolate_sensitivity(const SensitivityTable& table,
                                            std::span<const double> targets_nm);

/// CSV with header `wavelength_nm,s0,...` and one row per wavelength.
SensitivityTable read_sensitivity_csv(const std::filesystem::path& path);
void write_sensitivity_csv(const SensitivityTable& table, const std::filesystem::path& path);

/// Planck spectral radiance B(lambda, T) in W sr^-1 m^-3 (lambda in nm).
double planck_radiance(double wavelength_nm, double temperature_k);

struct BlackbodyOptions {
  double t_min = 1000.0;
  double t_max = 10000.0;
  std::size_t grid_points = 2001;
};

struct BlackbodyFit {
  double temperature_k = 0.0;
  /// Scale on the Planck curve normalised to peak 1 over the sampled grid.
  double amplitude = 0.0;
  double r_squared = 0.0;
  double residual = 0.0;  // sum of squared errors
};

/// Sum of squared errors of the best amplitude at a fixed temperature.
double blackbody_residual(const SpectralCurve& spectrum, double temperature_k);

/// Fits A * B(lambda, T): grid search over the temperature bracket, golden
/// section refinement, amplitude solved linearly per candidate. Throws
/// ValueError for fewer than 10 samples, non-positive wavelengths or an
/// all-zero spectrum, and when the best temperature sits on the bracket edge.
BlackbodyFit fit_blackbody(const SpectralCurve& spectrum, const BlackbodyOptions& options = {});

std::string format_fit(const GaussianFit& fit);
std::string format_fit(const BlackbodyFit& fit);

}  // namespace ctis

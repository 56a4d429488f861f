#include "ctis/calib.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <tuple>

#include "ctis/error.hpp"

namespace ctis {
namespace {

// CODATA 2018 exact values.
constexpr double kPlanck = 6.62607015e-34;     // J s
constexpr double kLightSpeed = 299792458.0;    // m / s
constexpr double kBoltzmann = 1.380649e-23;    // J / K

constexpr double kSigmaMin = 0.2;
constexpr double kSigmaMax = 10.0;
constexpr double kSigmaStep = 0.02;
constexpr double kMeanHalfRange = 2.0;
constexpr double kMeanStep = 0.05;

// Minimises a unimodal f on [a, b].
double golden_section(const std::function<double(double)>& f, double a, double b, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

struct GaussianModel {
  std::span<const double> x;
  std::span<const double> y;

  // SSE with the amplitude solved in closed form; writes the amplitude.
  double sse(double sigma, double mean, double* amplitude = nullptr) const {
    double smm = 0.0;
    double sym = 0.0;
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - mean;
      const double m = std::exp(-d * d * inv);
      smm += m * m;
      sym += y[i] * m;
    }
    const double a = smm > 0.0 ? std::max(0.0, sym / smm) : 0.0;
    double err = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - mean;
      const double r = y[i] - a * std::exp(-d * d * inv);
      err += r * r;
    }
    if (amplitude) *amplitude = a;
    return err;
  }

  // Best mean for a fixed sigma, searched around `centre`.
  std::pair<double, double> best_mean(double sigma, double centre) const {
    double best_mu = centre;
    double best = sse(sigma, centre);
    for (double mu = centre - kMeanHalfRange; mu <= centre + kMeanHalfRange + 1e-12; mu += kMeanStep) {
      const double e = sse(sigma, mu);
      if (e < best) {
        best = e;
        best_mu = mu;
      }
    }
    const double mu = golden_section([&](double m) { return sse(sigma, m); }, best_mu - kMeanStep,
                                     best_mu + kMeanStep, 1e-7);
    const double e = sse(sigma, mu);
    if (e <= best) return {e, mu};
    return {best, best_mu};
  }
};

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

void check_roi(const CtisImage& image, const Roi& roi) {
  if (roi.height < 2 || roi.width < 3) throw ValueError("roi must be at least 2 rows by 3 columns");
  if (roi.row + roi.height > image.side() || roi.col + roi.width > image.side()) {
    throw ValueError("roi out of bounds for a " + std::to_string(image.side()) + "-pixel image");
  }
}

// Normalised Planck basis over the spectrum's wavelengths (peak 1).
std::vector<double> planck_basis(std::span<const double> wavelengths, double temperature_k) {
  std::vector<double> b(wavelengths.size());
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = planck_radiance(wavelengths[i], temperature_k);
  const double peak = *std::max_element(b.begin(), b.end());
  if (peak > 0.0) {
    for (double& v : b) v /= peak;
  }
  return b;
}

std::pair<double, double> amplitude_and_sse(const SpectralCurve& s, double temperature_k) {
  const auto b = planck_basis(s.wavelengths(), temperature_k);
  double sbb = 0.0;
  double ssb = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    sbb += b[i] * b[i];
    ssb += s.values()[i] * b[i];
  }
  const double a = sbb > 0.0 ? ssb / sbb : 0.0;
  double sse = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double r = s.values()[i] - a * b[i];
    sse += r * r;
  }
  return {a, sse};
}

}  // namespace

EdgeProfile edge_profile(const CtisImage& image, const Roi& roi) {
  check_roi(image, roi);
  EdgeProfile p;
  p.esf.assign(roi.width, 0.0);
  for (std::size_t r = roi.row; r < roi.row + roi.height; ++r) {
    for (std::size_t c = 0; c < roi.width; ++c) p.esf[c] += image(r, roi.col + c);
  }
  for (double& v : p.esf) v /= static_cast<double>(roi.height);
  p.lsf.resize(roi.width - 1);
  p.lsf_positions.resize(roi.width - 1);
  for (std::size_t c = 0; c + 1 < roi.width; ++c) {
    p.lsf[c] = p.esf[c + 1] - p.esf[c];
    p.lsf_positions[c] = static_cast<double>(roi.col + c) + 0.5;
  }
  return p;
}

GaussianFit fit_gaussian(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw_dimension("fit_gaussian: sample count", x.size(), y.size());
  if (x.size() < 3) throw ValueError("fit_gaussian: need at least 3 samples");
  const GaussianModel model{x, y};
  const auto peak = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  const double centre = x[peak];

  double best_sigma = kSigmaMin;
  double best = std::numeric_limits<double>::infinity();
  for (double s = kSigmaMin; s <= kSigmaMax + 1e-12; s += kSigmaStep) {
    const double e = model.best_mean(s, centre).first;
    if (e < best) {
      best = e;
      best_sigma = s;
    }
  }
  const double lo = std::max(kSigmaMin, best_sigma - kSigmaStep);
  const double hi = std::min(kSigmaMax, best_sigma + kSigmaStep);
  double sigma = golden_section([&](double s) { return model.best_mean(s, centre).first; }, lo, hi, 1e-7);
  if (model.best_mean(sigma, centre).first > best) sigma = best_sigma;

  GaussianFit fit;
  fit.sigma = sigma;
  double sse = 0.0;
  std::tie(sse, fit.mean) = model.best_mean(sigma, centre);
  model.sse(sigma, fit.mean, &fit.amplitude);
  const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double sst = 0.0;
  for (double v : y) sst += (v - mean_y) * (v - mean_y);
  fit.r_squared = sst > 0.0 ? 1.0 - sse / sst : (sse == 0.0 ? 1.0 : 0.0);
  return fit;
}

GaussianFit estimate_psf(const CtisImage& image, const Roi& roi) {
  const EdgeProfile profile = edge_profile(image, roi);
  std::vector<double> magnitude(profile.lsf.size());
  std::transform(profile.lsf.begin(), profile.lsf.end(), magnitude.begin(),
                 [](double v) { return std::abs(v); });
  const double peak = *std::max_element(magnitude.begin(), magnitude.end());
  const double level = *std::max_element(profile.esf.begin(), profile.esf.end());

  // Noise floor from the spread of successive LSF differences: a smooth edge
  // response has small differences away from the transition, noise does not.
  std::vector<double> steps;
  for (std::size_t i = 0; i + 1 < profile.lsf.size(); ++i) {
    steps.push_back(std::abs(profile.lsf[i + 1] - profile.lsf[i]));
  }
  const double noise = 1.4826 * median(steps) / std::sqrt(2.0);
  if (peak <= 1e-12 * std::max(1.0, level) || peak < 5.0 * noise) {
    throw ValueError("no detectable edge in roi (LSF peak " + std::to_string(peak) +
                     " vs noise floor " + std::to_string(5.0 * noise) + ")");
  }
  return fit_gaussian(profile.lsf_positions, magnitude);
}

SensitivityTable::SensitivityTable(std::vector<double> wavelengths_nm, std::size_t orders,
                                   std::vector<double> values)
    : wavelengths_(std::move(wavelengths_nm)), orders_(orders), values_(std::move(values)) {
  if (orders_ == 0 || wavelengths_.empty()) throw ValueError("sensitivity table is empty");
  if (values_.size() != orders_ * wavelengths_.size()) {
    throw_dimension("sensitivity table entries", orders_ * wavelengths_.size(), values_.size());
  }
  for (std::size_t i = 1; i < wavelengths_.size(); ++i) {
    if (!(wavelengths_[i] > wavelengths_[i - 1])) {
      throw ValueError("sensitivity wavelengths must be strictly increasing");
    }
  }
  for (double v : values_) {
    if (!std::isfinite(v) || v < 0.0) throw ValueError("sensitivity values must be finite and >= 0");
  }
}

SensitivityTable diffraction_sensitivity(std::vector<double> wavelengths_nm,
                                         std::span<const double> photon_counts,
                                         std::span<const double> exposures_us,
                                         std::span<const double> gains,
                                         std::span<const double> corrections) {
  const std::size_t n = wavelengths_nm.size();
  if (n == 0) throw ValueError("diffraction_sensitivity: no wavelengths");
  if (exposures_us.size() != n) throw_dimension("diffraction_sensitivity: exposures", n, exposures_us.size());
  if (gains.size() != n) throw_dimension("diffraction_sensitivity: gains", n, gains.size());
  if (corrections.size() != n) throw_dimension("diffraction_sensitivity: corrections", n, corrections.size());
  if (photon_counts.size() % n != 0) {
    throw DimensionError("diffraction_sensitivity: photon counts are not orders x wavelengths");
  }
  const std::size_t orders = photon_counts.size() / n;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(exposures_us[i] > 0.0)) throw ValueError("diffraction_sensitivity: exposure must be > 0");
    if (!(gains[i] > 0.0)) throw ValueError("diffraction_sensitivity: gain must be > 0");
    if (!(corrections[i] > 0.0)) throw ValueError("diffraction_sensitivity: correction must be > 0");
  }
  std::vector<double> values(photon_counts.size());
  for (std::size_t s = 0; s < orders; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      const double pc = photon_counts[s * n + i];
      if (!(pc >= 0.0)) throw ValueError("diffraction_sensitivity: photon counts must be >= 0");
      values[s * n + i] = pc / (exposures_us[i] * gains[i] * corrections[i]);
    }
  }
  return SensitivityTable(std::move(wavelengths_nm), orders, std::move(values));
}

double spot_photon_count(const CtisImage& image, const CtisImage& dark, const Roi& box) {
  if (image.side() != dark.side()) throw_dimension("spot_photon_count: dark frame side", image.side(), dark.side());
  if (box.row + box.height > image.side() || box.col + box.width > image.side()) {
    throw ValueError("spot_photon_count: box out of bounds");
  }
  double total = 0.0;
  for (std::size_t r = box.row; r < box.row + box.height; ++r) {
    for (std::size_t c = box.col; c < box.col + box.width; ++c) {
      total += std::max(0.0, static_cast<double>(image(r, c)) - static_cast<double>(dark(r, c)));
    }
  }
  return total;
}

std::vector<double> interpolate_sensitivity(const SensitivityTable& table,
                                            std::span<const double> targets_nm) {
  if (table.samples() < 2) throw ValueError("interpolate_sensitivity: need at least 2 wavelengths");
  std::vector<double> out;
  out.reserve(table.orders() * targets_nm.size());
  for (std::size_t s = 0; s < table.orders(); ++s) {
    const auto row = table.order_row(s);
    for (double w : targets_nm) out.push_back(interpolate_linear(table.wavelengths(), row, w));
  }
  return out;
}

SensitivityTable read_sensitivity_csv(const std::filesystem::path& path) {
  const CsvTable csv = read_csv(path);
  if (csv.header.size() < 2) throw FormatError(path.string() + ": need a wavelength column and >= 1 order");
  const std::size_t orders = csv.header.size() - 1;
  std::vector<double> values(orders * csv.rows.size());
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    for (std::size_t s = 0; s < orders; ++s) values[s * csv.rows.size() + i] = csv.rows[i][s + 1];
  }
  return SensitivityTable(csv.column(0), orders, std::move(values));
}

void write_sensitivity_csv(const SensitivityTable& table, const std::filesystem::path& path) {
  CsvTable csv;
  csv.header.push_back("wavelength_nm");
  for (std::size_t s = 0; s < table.orders(); ++s) csv.header.push_back("s" + std::to_string(s));
  for (std::size_t i = 0; i < table.samples(); ++i) {
    std::vector<double> row{table.wavelengths()[i]};
    for (std::size_t s = 0; s < table.orders(); ++s) row.push_back(table.at(s, i));
    csv.rows.push_back(std::move(row));
  }
  write_csv(csv, path);
}

double planck_radiance(double wavelength_nm, double temperature_k) {
  const double lambda = wavelength_nm * 1e-9;
  const double x = kPlanck * kLightSpeed / (lambda * kBoltzmann * temperature_k);
  return 2.0 * kPlanck * kLightSpeed * kLightSpeed / std::pow(lambda, 5) / std::expm1(x);
}

double blackbody_residual(const SpectralCurve& spectrum, double temperature_k) {
  return amplitude_and_sse(spectrum, temperature_k).second;
}

BlackbodyFit fit_blackbody(const SpectralCurve& spectrum, const BlackbodyOptions& options) {
  if (spectrum.size() < 10) throw ValueError("fit_blackbody: need at least 10 samples");
  if (spectrum.wavelengths().front() <= 0.0) throw ValueError("fit_blackbody: wavelengths must be > 0");
  const auto values = spectrum.values();
  if (*std::max_element(values.begin(), values.end()) <= 0.0) {
    throw ValueError("fit_blackbody: spectrum is non-positive");
  }
  if (!(options.t_min > 0.0) || !(options.t_max > options.t_min) || options.grid_points < 3) {
    throw ValueError("fit_blackbody: invalid temperature bracket");
  }

  const std::size_t n = options.grid_points;
  const double step = (options.t_max - options.t_min) / static_cast<double>(n - 1);
  std::size_t best_i = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double e = blackbody_residual(spectrum, options.t_min + step * static_cast<double>(i));
    if (e < best) {
      best = e;
      best_i = i;
    }
  }
  if (best_i == 0 || best_i == n - 1) {
    throw ValueError("fit_blackbody: no interior minimum in [" + std::to_string(options.t_min) + ", " +
                     std::to_string(options.t_max) + "] K");
  }
  const double lo = options.t_min + step * static_cast<double>(best_i - 1);
  const double hi = options.t_min + step * static_cast<double>(best_i + 1);
  const double t = golden_section([&](double temp) { return blackbody_residual(spectrum, temp); }, lo, hi, 1e-6);

  BlackbodyFit fit;
  fit.temperature_k = t;
  std::tie(fit.amplitude, fit.residual) = amplitude_and_sse(spectrum, t);
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double sst = 0.0;
  for (double v : values) sst += (v - mean) * (v - mean);
  fit.r_squared = sst > 0.0 ? 1.0 - fit.residual / sst : 1.0;
  return fit;
}

std::string format_fit(const GaussianFit& fit) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "sigma=%.6g, mean=%.6g, amplitude=%.6g, r_squared=%.6g", fit.sigma,
                fit.mean, fit.amplitude, fit.r_squared);
  return buf;
}

std::string format_fit(const BlackbodyFit& fit) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "temperature_k=%.6g, amplitude=%.6g, r_squared=%.6g", fit.temperature_k,
                fit.amplitude, fit.r_squared);
  return buf;
}

}  // namespace ctis

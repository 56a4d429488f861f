#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ctis {

/// A sampled function of wavelength (nm). Wavelengths strictly increasing,
/// values non-negative, at least two samples.
class SpectralCurve {
 public:
  SpectralCurve(std::vector<double> wavelengths_nm, std::vector<double> values);

  [[nodiscard]] std::span<const double> wavelengths() const { return wavelengths_; }
  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }

  /// Piecewise-linear value at `wavelength_nm`; throws ValueError outside
  /// [front, back].
  [[nodiscard]] double at(double wavelength_nm) const;
  [[nodiscard]] std::vector<double> resample(std::span<const double> wavelengths_nm) const;

 private:
  std::vector<double> wavelengths_;
  std::vector<double> values_;
};

/// Piecewise-linear interpolation of (xs, ys) at x. xs strictly increasing.
/// Throws ValueError when x lies outside [xs.front(), xs.back()].
double interpolate_linear(std::span<const double> xs, std::span<const double> ys, double x);

/// `count` channel-centre wavelengths evenly spaced over [first, last].
std::vector<double> channel_wavelengths(double first_nm, double last_nm, std::size_t count);

/// A numeric CSV table with one header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  [[nodiscard]] std::vector<double> column(std::size_t index) const;
  [[nodiscard]] std::size_t column_index(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text);
void write_csv(const CsvTable& table, const std::filesystem::path& path);
std::string format_csv(const CsvTable& table);

/// Two-column `wavelength_nm,value` spectrum files.
SpectralCurve read_spectrum_csv(const std::filesystem::path& path);
void write_spectrum_csv(const SpectralCurve& curve, const std::filesystem::path& path);

}  // namespace ctis

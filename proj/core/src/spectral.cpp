#include "ctis/spectral.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ctis/cube.hpp"
#include "ctis/error.hpp"

namespace ctis {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& field, std::size_t line_no) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  if (!field.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) {
    throw FormatError("csv line " + std::to_string(line_no) + ": not a number: '" + field + "'");
  }
  return v;
}

std::string format_number(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

SpectralCurve::SpectralCurve(std::vector<double> wavelengths_nm, std::vector<double> values)
    : wavelengths_(std::move(wavelengths_nm)), values_(std::move(values)) {
  if (wavelengths_.size() != values_.size()) {
    throw_dimension("spectral curve value count", wavelengths_.size(), values_.size());
  }
  if (wavelengths_.size() < 2) throw ValueError("spectral curve needs at least 2 samples");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]) || values_[i] < 0.0) {
      throw ValueError("spectral curve values must be finite and >= 0");
    }
    if (i > 0 && !(wavelengths_[i] > wavelengths_[i - 1])) {
      throw ValueError("spectral curve wavelengths must be strictly increasing");
    }
  }
}

double SpectralCurve::at(double wavelength_nm) const {
  return interpolate_linear(wavelengths_, values_, wavelength_nm);
}

std::vector<double> SpectralCurve::resample(std::span<const double> wavelengths_nm) const {
  std::vector<double> out;
  out.reserve(wavelengths_nm.size());
  for (double w : wavelengths_nm) out.push_back(at(w));
  return out;
}

double interpolate_linear(std::span<const double> xs, std::span<const double> ys, double x) {
  if (xs.empty() || xs.size() != ys.size()) throw DimensionError("interpolation table is malformed");
  // Half-ulp slack so grids computed as first + i*step still land inside.
  const double slack = 1e-9 * std::max(1.0, std::abs(xs.back()));
  if (!(x >= xs.front() - slack && x <= xs.back() + slack)) {
    throw ValueError("extrapolation requested at " + format_number(x) + " outside [" +
                     format_number(xs.front()) + ", " + format_number(xs.back()) + "]");
  }
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
  const std::size_t lo = hi - 1;
  const double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + t * (ys[hi] - ys[lo]);
}

std::vector<double> channel_wavelengths(double first_nm, double last_nm, std::size_t count) {
  if (count == 0) throw ValueError("channel count must be >= 1");
  std::vector<double> out(count, first_nm);
  if (count == 1) return out;
  const double step = (last_nm - first_nm) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) out[i] = first_nm + step * static_cast<double>(i);
  out.back() = last_nm;
  return out;
}

std::vector<double> CsvTable::column(std::size_t index) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row.at(index));
  return out;
}

std::size_t CsvTable::column_index(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw FormatError("csv: missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (table.header.empty()) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw FormatError("csv line " + std::to_string(line_no) + ": expected " +
                        std::to_string(table.header.size()) + " fields, got " +
                        std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_number(f, line_no));
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw FormatError("csv: missing header row");
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

std::string format_csv(const CsvTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out += ',';
    out += table.header[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_number(row[i]);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const CsvTable& table, const std::filesystem::path& path) {
  const std::string text = format_csv(table);
  write_file_atomic(path, text);
}

SpectralCurve read_spectrum_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  if (table.header.size() != 2) throw FormatError(path.string() + ": expected 2 columns");
  return SpectralCurve(table.column(0), table.column(1));
}

void write_spectrum_csv(const SpectralCurve& curve, const std::filesystem::path& path) {
  CsvTable table;
  table.header = {"wavelength_nm", "value"};
  for (std::size_t i = 0; i < curve.size(); ++i) {
    table.rows.push_back({curve.wavelengths()[i], curve.values()[i]});
  }
  write_csv(table, path);
}

}  // namespace ctis

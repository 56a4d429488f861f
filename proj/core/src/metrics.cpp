#include "ctis/metrics.hpp"

#include <cmath>
#include <limits>

#include "ctis/error.hpp"

namespace ctis {

double mse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw_dimension("mse: element count", a.size(), b.size());
  if (a.empty()) throw DimensionError("mse: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double mse(const HyperCube& a, const HyperCube& b) {
  if (a.shape() != b.shape()) throw DimensionError("mse: cube shapes differ");
  double acc = 0.0;
  const auto va = a.values();
  const auto vb = b.values();
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double d = static_cast<double>(va[i]) - static_cast<double>(vb[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(va.size());
}

double psnr(double mse) {
  if (std::isnan(mse) || mse < 0.0) throw ValueError("psnr: mse must be >= 0");
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(kPsnrPeak * kPsnrPeak / mse);
}

}  // namespace ctis

#include <cmath>
#include <limits>
#include <random>

#include "ctis/error.hpp"
#include "ctis/metrics.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace ctis;

TEST_CASE("mse of identical and offset cubes") {
  std::mt19937_64 rng(1);
  const auto a = oracle::random_cube({5, 4, 3}, rng, 100.0f);
  CHECK(mse(a, a) == 0.0);
  std::vector<float> shifted(a.values().begin(), a.values().end());
  for (float& v : shifted) v += 2.0f;
  CHECK(mse(a, HyperCube(a.shape(), shifted)) == doctest::Approx(4.0).epsilon(1e-6));
  CHECK_THROWS_AS(mse(a, HyperCube::filled({5, 4, 2}, 0.0f)), DimensionError);
}

TEST_CASE("mse matches a naive two-pass loop") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = oracle::random_cube({7, 6, 5}, rng, 255.0f);
    const auto b = oracle::random_cube({7, 6, 5}, rng, 255.0f);
    std::vector<double> diff;
    for (std::size_t i = 0; i < a.size(); ++i) {
      diff.push_back(static_cast<double>(a.values()[i]) - static_cast<double>(b.values()[i]));
    }
    double sum = 0.0;
    for (double d : diff) sum += d * d;
    const double expected = sum / static_cast<double>(diff.size());
    CHECK(std::abs(mse(a, b) - expected) <= 1e-9 * expected);
    CHECK(mse(a, b) == mse(b, a));
  }
}

TEST_CASE("psnr values") {
  CHECK(psnr(65025.0) == doctest::Approx(0.0));
  CHECK(std::abs(psnr(121.50) - 27.2850) < 1e-4);
  CHECK(std::abs(psnr(0.91) - 48.5404) < 1e-4);
  CHECK(std::isinf(psnr(0.0)));
  CHECK(psnr(0.0) > 0.0);
  CHECK_THROWS_AS(psnr(-1.0), ValueError);
  CHECK_THROWS_AS(psnr(std::numeric_limits<double>::quiet_NaN()), ValueError);
}

TEST_CASE("psnr is strictly decreasing") {
  double prev = psnr(1e-6);
  for (double m = 1e-5; m < 1e6; m *= 1.7) {
    const double p = psnr(m);
    CHECK(p < prev);
    prev = p;
  }
}

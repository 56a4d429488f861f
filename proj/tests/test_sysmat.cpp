#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "ctis/error.hpp"
#include "ctis/simulator.hpp"
#include "ctis/sysmat.hpp"
#include "doctest.h"
#include "oracles.hpp"

#ifdef CTIS_HAVE_EIGEN
#include <Eigen/Sparse>
#include <unsupported/Eigen/SparseExtra>
#endif

using namespace ctis;

namespace {

GeometryParams geometry(std::size_t side, std::size_t z, std::size_t b1, std::size_t shift,
                        bool all_orders = true) {
  GeometryParams g;
  g.x = g.y = side;
  g.z = z;
  g.b1 = b1;
  g.b2 = 0;
  g.shift = shift;
  g.all_orders = all_orders;
  return g;
}

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "ctis_test_sysmat";
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("unblurred columns hold one unit entry per order") {
  for (bool all : {true, false}) {
    const auto g = geometry(6, 3, 2, 1, all);
    const auto h = build_h(g, OpticalParams::uniform(g));
    CHECK(h.rows() == 26 * 26);
    CHECK(h.cols() == 108);
    const std::size_t per_column = all ? 9 : 5;
    CHECK(h.nnz() == h.cols() * per_column);
    for (std::size_t j = 0; j < h.cols(); ++j) {
      CHECK(h.col_ptr()[j + 1] - h.col_ptr()[j] == per_column);
    }
    for (double v : h.values()) CHECK(v == 1.0);
  }
}

TEST_CASE("column sums equal the combined sensitivity of the channel") {
  // Gaps wider than the PSF radius: no stencil is clipped and no two orders overlap.
  auto g = geometry(6, 3, 12, 1);
  g.b2 = 6;
  std::mt19937_64 rng(2);
  const auto optics = oracle::random_optics(g, 1.04, rng);
  const auto h = build_h(g, optics);
  for (std::size_t j = 0; j < h.cols(); ++j) {
    const std::size_t k = j % g.z;
    double expected = 0.0;
    for (std::size_t s = 0; s < 9; ++s) expected += optics.weight(s, k);
    CHECK(std::abs(h.col_sums()[j] - expected) <= 1e-6 * expected);
    double direct = 0.0;
    for (auto p = h.col_ptr()[j]; p < h.col_ptr()[j + 1]; ++p) direct += h.values()[p];
    CHECK(std::abs(h.col_sums()[j] - direct) <= 1e-9 * direct);
  }
  const std::size_t area = (2 * kernel_radius(1.04) + 1) * (2 * kernel_radius(1.04) + 1);
  CHECK(h.nnz() == h.cols() * 9 * area);
  CHECK(estimate_nnz(g, optics) == h.nnz());
}

TEST_CASE("build_h matches the dense brute-force oracle") {
  std::mt19937_64 rng(13);
  for (double sigma : {0.0, 0.7, 1.04}) {
    for (bool all : {true, false}) {
      const auto g = geometry(4, 2, 1, 1, all);
      const auto optics = oracle::random_optics(g, sigma, rng);
      const auto h = build_h(g, optics);
      const auto dense = oracle::dense_h(g, optics);
      REQUIRE(dense.rows == h.rows());
      REQUIRE(dense.cols == h.cols());

      for (int trial = 0; trial < 5; ++trial) {
        const auto f = random_vector(h.cols(), rng);
        CHECK(oracle::max_rel_diff(h.matvec(f), dense.multiply(f)) < 1e-9);
        const auto v = random_vector(h.rows(), rng);
        CHECK(oracle::max_rel_diff(h.rmatvec(v), dense.multiply_transposed(v)) < 1e-9);
      }
      // One-hot images select rows.
      for (std::size_t i = 0; i < h.rows(); i += 7) {
        std::vector<double> e(h.rows(), 0.0);
        e[i] = 1.0;
        const auto row = h.rmatvec(e);
        for (std::size_t j = 0; j < h.cols(); ++j) {
          CHECK(std::abs(row[j] - dense.at(i, j)) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("H applied to ones equals the projection of a white cube") {
  const auto g = geometry(6, 3, 2, 1);
  const auto optics = OpticalParams::uniform(g);
  const auto h = build_h(g, optics);
  const std::vector<double> ones(h.cols(), 1.0);
  const auto white = project(HyperCube::filled(g.cube_shape(), 1.0f), g, optics).to_doubles();
  CHECK(oracle::max_rel_diff(h.matvec(ones), white) < 1e-9);
  const std::vector<double> zero(h.cols(), 0.0);
  for (double v : h.matvec(zero)) CHECK(v == 0.0);
}

TEST_CASE("adjoint identity") {
  const auto g = geometry(4, 2, 1, 1);
  std::mt19937_64 rng(17);
  const auto h = build_h(g, oracle::random_optics(g, 1.04, rng));
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = random_vector(h.cols(), rng);
    const auto v = random_vector(h.rows(), rng);
    const double lhs = oracle::dot(h.matvec(f), v);
    const double rhs = oracle::dot(f, h.rmatvec(v));
    CHECK(std::abs(lhs - rhs) <= 1e-9 * std::abs(lhs));
  }
  const std::vector<double> ones(h.rows(), 1.0);
  const auto sums = h.rmatvec(ones);
  for (std::size_t j = 0; j < h.cols(); ++j) {
    CHECK(std::abs(sums[j] - h.col_sums()[j]) <= 1e-12 * h.col_sums()[j]);
  }
}

TEST_CASE("zero-weight orders and channels are not stored") {
  const auto g = geometry(4, 2, 1, 1);
  auto optics = OpticalParams::uniform(g);
  optics.diff_sens[0 * 2 + 1] = 0.0;  // order 0, channel 1
  const auto h = build_h(g, optics);
  CHECK(h.nnz() == 16 * 9 + 16 * 8);
  for (double v : h.values()) CHECK(v > 0.0);
  optics.illum[1] = 0.0;
  const auto dark = build_h(g, optics);
  for (std::size_t j = 1; j < dark.cols(); j += 2) CHECK(dark.col_sums()[j] == 0.0);
}

TEST_CASE("capacity guard reports the estimate") {
  const GeometryParams g;
  const auto optics = OpticalParams::uniform(g, 1.04);
  const std::size_t estimate = estimate_nnz(g, optics);
  CHECK(estimate == 250'000u * 9u * 121u);
  try {
    (void)build_h(g, optics, BuildOptions{1000});
    FAIL("expected CapacityError");
  } catch (const CapacityError& e) {
    CHECK(e.estimate() == estimate);
    CHECK(std::string(e.what()).find(std::to_string(estimate)) != std::string::npos);
  }
}

TEST_CASE("length mismatches are rejected") {
  const auto g = geometry(4, 2, 1, 1);
  const auto h = build_h(g, OpticalParams::uniform(g));
  CHECK_THROWS_AS((void)h.matvec(std::vector<double>(h.cols() + 1)), DimensionError);
  CHECK_THROWS_AS((void)h.rmatvec(std::vector<double>(h.rows() - 1)), DimensionError);
}

TEST_CASE("constructor validates the CSC structure") {
  const CubeShape one{1, 1, 1};
  CHECK_NOTHROW(SparseSystemMatrix(2, one, {0, 2}, {0, 3}, {1.0, 2.0}));
  CHECK_THROWS_AS(SparseSystemMatrix(2, one, {0, 2}, {3, 0}, {1.0, 2.0}), FormatError);
  CHECK_THROWS_AS(SparseSystemMatrix(2, one, {0, 2}, {0, 4}, {1.0, 2.0}), FormatError);
  CHECK_THROWS_AS(SparseSystemMatrix(2, one, {0, 2}, {0, 1}, {1.0, 0.0}), ValueError);
  CHECK_THROWS(SparseSystemMatrix(2, one, {0, 3}, {0, 1}, {1.0, 1.0}));
}

TEST_CASE("Matrix Market export") {
  GeometryParams g{1, 1, 1, 0, 0, 1, true};
  const auto h = build_h(g, OpticalParams::uniform(g));
  std::ostringstream out;
  export_matrix_market(h, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "%%MatrixMarket matrix coordinate real general");
  while (std::getline(in, line) && line.starts_with('%')) {
  }
  CHECK(line == "9 1 9");
  std::size_t entries = 0;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::size_t r = 0;
    std::size_t c = 0;
    double v = 0.0;
    fields >> r >> c >> v;
    CHECK(r == entries + 1);
    CHECK(c == 1);
    CHECK(v == 1.0);
    ++entries;
  }
  CHECK(entries == 9);
}

#ifdef CTIS_HAVE_EIGEN
TEST_CASE("Matrix Market round trip through an external reader") {
  const auto g = geometry(4, 2, 1, 1);
  std::mt19937_64 rng(23);
  const auto h = build_h(g, oracle::random_optics(g, 1.04, rng));
  const auto path = temp_dir() / "h.mtx";
  export_matrix_market(h, path);
  Eigen::SparseMatrix<double, Eigen::ColMajor> m;
  REQUIRE(Eigen::loadMarket(m, path.string()));
  m.makeCompressed();
  CHECK(static_cast<std::size_t>(m.rows()) == h.rows());
  CHECK(static_cast<std::size_t>(m.cols()) == h.cols());
  CHECK(static_cast<std::size_t>(m.nonZeros()) == h.nnz());
  for (std::size_t j = 0; j < h.cols(); ++j) {
    for (auto p = h.col_ptr()[j]; p < h.col_ptr()[j + 1]; ++p) {
      const double back = m.coeff(static_cast<Eigen::Index>(h.row_indices()[p]),
                                  static_cast<Eigen::Index>(j));
      CHECK(back == h.values()[p]);
    }
  }
}
#endif

TEST_CASE("binary cache round trip and key check") {
  const auto g = geometry(5, 3, 2, 1);
  std::mt19937_64 rng(29);
  const auto optics = oracle::random_optics(g, 1.04, rng);
  const auto h = build_h(g, optics);
  const auto key = system_matrix_key(g, optics);
  const auto path = temp_dir() / "h.bin";
  save_system_matrix(h, key, path);
  const auto back = load_system_matrix(path, key);
  CHECK(back.image_side() == h.image_side());
  CHECK(back.cube_shape() == h.cube_shape());
  CHECK(std::equal(back.col_ptr().begin(), back.col_ptr().end(), h.col_ptr().begin()));
  CHECK(std::equal(back.row_indices().begin(), back.row_indices().end(), h.row_indices().begin()));
  CHECK(std::equal(back.values().begin(), back.values().end(), h.values().begin()));
  CHECK_THROWS_AS(load_system_matrix(path, key ^ 1u), FormatError);

  auto other = optics;
  other.sigma_psf = 1.05;
  CHECK(system_matrix_key(g, other) != key);
  other = optics;
  other.noise_sigma = 3.0;
  CHECK(system_matrix_key(g, other) == key);
  auto g2 = g;
  g2.b1 = 3;
  CHECK(system_matrix_key(g2, optics) != key);

  // Truncated cache file.
  const auto cut = temp_dir() / "h_cut.bin";
  std::filesystem::copy_file(path, cut, std::filesystem::copy_options::overwrite_existing);
  std::filesystem::resize_file(cut, std::filesystem::file_size(path) - 8);
  CHECK_THROWS_AS(load_system_matrix(cut, key), FormatError);
}

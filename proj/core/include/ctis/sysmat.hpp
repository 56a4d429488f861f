#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "ctis/cube.hpp"
#include "ctis/error.hpp"
#include "ctis/simulator.hpp"

namespace ctis {

/// Raised when a system matrix would exceed the configured non-zero budget.
class CapacityError : public Error {
 public:
  CapacityError(std::size_t estimate, std::size_t cap);
  [[nodiscard]] std::size_t estimate() const { return estimate_; }

 private:
  std::size_t estimate_;
};

/// The q^2 x r system matrix H in compressed sparse column form. Column j is
/// the sensor response to unit voxel j (voxel order as in HyperCube). Stored
/// values are strictly positive and row indices are sorted within a column.
class SparseSystemMatrix {
 public:
  SparseSystemMatrix() = default;
  SparseSystemMatrix(std::size_t image_side, CubeShape cube, std::vector<std::uint64_t> col_ptr,
                     std::vector<std::uint32_t> row_idx, std::vector<double> values);

  [[nodiscard]] std::size_t rows() const { return side_ * side_; }
  [[nodiscard]] std::size_t cols() const { return cube_.voxels(); }
  [[nodiscard]] std::size_t image_side() const { return side_; }
  [[nodiscard]] const CubeShape& cube_shape() const { return cube_; }
  [[nodiscard]] std::size_t nnz() const { return values_.size(); }

  [[nodiscard]] std::span<const std::uint64_t> col_ptr() const { return col_ptr_; }
  [[nodiscard]] std::span<const std::uint32_t> row_indices() const { return row_idx_; }
  [[nodiscard]] std::span<const double> values() const { return values_; }
  /// sum_i H_ij for every column j.
  [[nodiscard]] std::span<const double> col_sums() const { return col_sums_; }

  /// H f. `f` has cols() entries.
  [[nodiscard]] std::vector<double> matvec(std::span<const double> f) const;
  /// H^T v. `v` has rows() entries.
  [[nodiscard]] std::vector<double> rmatvec(std::span<const double> v) const;

 private:
  std::size_t side_ = 0;
  CubeShape cube_;
  std::vector<std::uint64_t> col_ptr_;
  std::vector<std::uint32_t> row_idx_;
  std::vector<double> values_;
  std::vector<double> col_sums_;
};

struct BuildOptions {
  /// Refuse to build when the predicted number of stored entries exceeds this.
  std::size_t max_nnz = 300'000'000;
};

/// Upper bound on nnz: sum over voxels of (orders with non-zero weight) x
/// kernel area. Exact when no stencil is clipped by the canvas border.
std::size_t estimate_nnz(const GeometryParams& geom, const OpticalParams& optics);

/// Builds H from one PSF stencil per (order, channel), translated to each
/// spatial position. Stencils are clipped, not wrapped, at the canvas border.
/// Noise is not part of H.
SparseSystemMatrix build_h(const GeometryParams& geom, const OpticalParams& optics,
                           const BuildOptions& options = {});

/// Coordinate-format Matrix Market ("matrix coordinate real general"), 1-based.
void export_matrix_market(const SparseSystemMatrix& h, std::ostream& out);
void export_matrix_market(const SparseSystemMatrix& h, const std::filesystem::path& path);

/// Stable 64-bit key of a geometry + optics pair (noise excluded), used to
/// validate cached matrices.
std::uint64_t system_matrix_key(const GeometryParams& geom, const OpticalParams& optics);

/// Binary matrix cache ("HMAT" v1, little-endian): key, side, cube shape, nnz,
/// then col_ptr, row indices and values.
void save_system_matrix(const SparseSystemMatrix& h, std::uint64_t key,
                        const std::filesystem::path& path);
/// Loads a cached matrix; throws FormatError when the stored key differs.
SparseSystemMatrix load_system_matrix(const std::filesystem::path& path, std::uint64_t key);

}  // namespace ctis

#include "ctis/sysmat.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>
#include <system_error>

#include "ctis/parallel.hpp"

namespace ctis {
namespace {

struct Entry {
  std::uint32_t row;
  double value;
};

// One column's worth of entries; duplicates from overlapping orders merged.
void merge_sorted(std::vector<Entry>& entries) {
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.row < b.row; });
  std::size_t out = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (out > 0 && entries[out - 1].row == entries[i].row) {
      entries[out - 1].value += entries[i].value;
    } else {
      entries[out++] = entries[i];
    }
  }
  entries.resize(out);
  std::erase_if(entries, [](const Entry& e) { return !(e.value > 0.0); });
}

class Fnv1a {
 public:
  void add(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      hash_ ^= (v >> (8 * i)) & 0xffu;
      hash_ *= 0x100000001b3ull;
    }
  }
  void add(double v) { add(std::bit_cast<std::uint64_t>(v)); }
  [[nodiscard]] std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ull;
};

constexpr char kMatrixMagic[4] = {'H', 'M', 'A', 'T'};

template <typename T>
void write_raw(std::ostream& out, const T* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
}

template <typename T>
void read_raw(std::istream& in, T* data, std::size_t count, const std::filesystem::path& path) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
  if (!in) throw FormatError(path.string() + ": truncated matrix cache");
}

void require_little_endian() {
  if constexpr (std::endian::native != std::endian::little) {
    throw IoError("matrix cache requires a little-endian host");
  }
}

}  // namespace

CapacityError::CapacityError(std::size_t estimate, std::size_t cap)
    : Error("system matrix would hold ~" + std::to_string(estimate) +
            " non-zeros, above the cap of " + std::to_string(cap)),
      estimate_(estimate) {}

SparseSystemMatrix::SparseSystemMatrix(std::size_t image_side, CubeShape cube,
                                       std::vector<std::uint64_t> col_ptr,
                                       std::vector<std::uint32_t> row_idx,
                                       std::vector<double> values)
    : side_(image_side),
      cube_(cube),
      col_ptr_(std::move(col_ptr)),
      row_idx_(std::move(row_idx)),
      values_(std::move(values)) {
  if (col_ptr_.size() != cols() + 1) throw_dimension("system matrix col_ptr", cols() + 1, col_ptr_.size());
  if (row_idx_.size() != values_.size()) throw_dimension("system matrix row indices", values_.size(), row_idx_.size());
  if (col_ptr_.front() != 0 || col_ptr_.back() != values_.size()) {
    throw FormatError("system matrix col_ptr does not span the stored values");
  }
  col_sums_.assign(cols(), 0.0);
  for (std::size_t j = 0; j < cols(); ++j) {
    if (col_ptr_[j + 1] < col_ptr_[j]) throw FormatError("system matrix col_ptr is not monotone");
    double sum = 0.0;
    for (std::uint64_t p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) {
      if (!(values_[p] > 0.0) || !std::isfinite(values_[p])) {
        throw ValueError("system matrix entries must be finite and > 0");
      }
      if (row_idx_[p] >= rows()) throw FormatError("system matrix row index out of range");
      if (p > col_ptr_[j] && row_idx_[p] <= row_idx_[p - 1]) {
        throw FormatError("system matrix row indices must be strictly increasing per column");
      }
      sum += values_[p];
    }
    col_sums_[j] = sum;
  }
}

std::vector<double> SparseSystemMatrix::matvec(std::span<const double> f) const {
  if (f.size() != cols()) throw_dimension("matvec: input length", cols(), f.size());
  const std::size_t n_rows = rows();
  const std::size_t chunks = chunk_count(cols());
  // Column-parallel scatter with one partial image per chunk, merged in chunk
  // order so the result does not depend on scheduling.
  std::vector<std::vector<double>> partial(chunks);
  parallel_for(cols(), [&](std::size_t begin, std::size_t end, std::size_t chunk) {
    auto& acc = partial[chunk];
    acc.assign(n_rows, 0.0);
    for (std::size_t j = begin; j < end; ++j) {
      const double fj = f[j];
      if (fj == 0.0) continue;
      for (std::uint64_t p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) acc[row_idx_[p]] += values_[p] * fj;
    }
  });
  std::vector<double> out = std::move(partial.front());
  for (std::size_t c = 1; c < chunks; ++c) {
    for (std::size_t i = 0; i < n_rows; ++i) out[i] += partial[c][i];
  }
  return out;
}

std::vector<double> SparseSystemMatrix::rmatvec(std::span<const double> v) const {
  if (v.size() != rows()) throw_dimension("rmatvec: input length", rows(), v.size());
  std::vector<double> out(cols(), 0.0);
  parallel_for(cols(), [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t j = begin; j < end; ++j) {
      double acc = 0.0;
      for (std::uint64_t p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) acc += values_[p] * v[row_idx_[p]];
      out[j] = acc;
    }
  });
  return out;
}

std::size_t estimate_nnz(const GeometryParams& geom, const OpticalParams& optics) {
  geom.validate();
  optics.validate(geom);
  const std::size_t taps = 2 * kernel_radius(optics.sigma_psf) + 1;
  std::size_t per_pixel = 0;
  for (std::size_t s = 0; s < optics.orders; ++s) {
    for (std::size_t k = 0; k < geom.z; ++k) {
      if (optics.weight(s, k) > 0.0) per_pixel += taps * taps;
    }
  }
  return per_pixel * geom.x * geom.y;
}

SparseSystemMatrix build_h(const GeometryParams& geom, const OpticalParams& optics,
                           const BuildOptions& options) {
  const std::size_t estimate = estimate_nnz(geom, optics);
  if (estimate > options.max_nnz) throw CapacityError(estimate, options.max_nnz);

  const std::size_t q = image_side(geom);
  if (q * q > std::numeric_limits<std::uint32_t>::max()) throw ValueError("canvas too large for 32-bit row indices");
  const CubeShape shape = geom.cube_shape();
  const auto orders = diffraction_orders(geom.all_orders);
  const auto taps = gaussian_kernel(optics.sigma_psf);
  const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const auto side = static_cast<std::ptrdiff_t>(q);

  // Stencil origins per (order, channel) for the voxel at spatial (0, 0).
  std::vector<PixelPos> origins(orders.size() * geom.z);
  for (std::size_t s = 0; s < orders.size(); ++s) {
    for (std::size_t k = 0; k < geom.z; ++k) origins[s * geom.z + k] = spot_origin(geom, orders[s], k);
  }

  const std::size_t n_cols = shape.voxels();
  const std::size_t chunks = chunk_count(n_cols);
  std::vector<std::vector<std::uint64_t>> chunk_counts(chunks);
  std::vector<std::vector<std::uint32_t>> chunk_rows(chunks);
  std::vector<std::vector<double>> chunk_values(chunks);

  parallel_for(n_cols, [&](std::size_t begin, std::size_t end, std::size_t chunk) {
    std::vector<Entry> column;
    auto& counts = chunk_counts[chunk];
    auto& rows = chunk_rows[chunk];
    auto& vals = chunk_values[chunk];
    counts.reserve(end - begin);
    for (std::size_t j = begin; j < end; ++j) {
      const std::size_t k = j % shape.channels;
      const std::size_t pixel = j / shape.channels;
      const std::size_t r = pixel / shape.width;
      const std::size_t c = pixel % shape.width;
      column.clear();
      for (std::size_t s = 0; s < orders.size(); ++s) {
        const double w = optics.weight(s, k);
        if (w == 0.0) continue;
        const PixelPos o = origins[s * geom.z + k];
        const auto centre_row = static_cast<std::ptrdiff_t>(o.row + r);
        const auto centre_col = static_cast<std::ptrdiff_t>(o.col + c);
        for (std::ptrdiff_t a = -radius; a <= radius; ++a) {
          const std::ptrdiff_t pr = centre_row + a;
          if (pr < 0 || pr >= side) continue;
          const double wa = w * taps[a + radius];
          for (std::ptrdiff_t b = -radius; b <= radius; ++b) {
            const std::ptrdiff_t pc = centre_col + b;
            if (pc < 0 || pc >= side) continue;
            column.push_back({static_cast<std::uint32_t>(pr * side + pc), wa * taps[b + radius]});
          }
        }
      }
      merge_sorted(column);
      counts.push_back(column.size());
      for (const Entry& e : column) {
        rows.push_back(e.row);
        vals.push_back(e.value);
      }
    }
  });

  std::vector<std::uint64_t> col_ptr;
  col_ptr.reserve(n_cols + 1);
  col_ptr.push_back(0);
  std::size_t total = 0;
  for (const auto& counts : chunk_counts) {
    for (std::uint64_t n : counts) col_ptr.push_back(col_ptr.back() + n);
  }
  for (const auto& v : chunk_values) total += v.size();
  std::vector<std::uint32_t> row_idx;
  std::vector<double> values;
  row_idx.reserve(total);
  values.reserve(total);
  for (std::size_t c = 0; c < chunks; ++c) {
    row_idx.insert(row_idx.end(), chunk_rows[c].begin(), chunk_rows[c].end());
    values.insert(values.end(), chunk_values[c].begin(), chunk_values[c].end());
    std::vector<std::uint32_t>().swap(chunk_rows[c]);
    std::vector<double>().swap(chunk_values[c]);
  }
  return SparseSystemMatrix(q, shape, std::move(col_ptr), std::move(row_idx), std::move(values));
}

void export_matrix_market(const SparseSystemMatrix& h, std::ostream& out) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << "% CTIS system matrix: rows are sensor pixels, columns are cube voxels\n";
  out << h.rows() << ' ' << h.cols() << ' ' << h.nnz() << '\n';
  out << std::setprecision(17);
  const auto col_ptr = h.col_ptr();
  const auto rows = h.row_indices();
  const auto vals = h.values();
  for (std::size_t j = 0; j < h.cols(); ++j) {
    for (std::uint64_t p = col_ptr[j]; p < col_ptr[j + 1]; ++p) {
      out << (rows[p] + 1) << ' ' << (j + 1) << ' ' << vals[p] << '\n';
    }
  }
  if (!out) throw IoError("failed writing Matrix Market stream");
}

void export_matrix_market(const SparseSystemMatrix& h, const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot create " + tmp.string());
    export_matrix_market(h, out);
  }
  std::filesystem::rename(tmp, path);
}

std::uint64_t system_matrix_key(const GeometryParams& geom, const OpticalParams& optics) {
  Fnv1a h;
  for (std::size_t v : {geom.x, geom.y, geom.z, geom.b1, geom.b2, geom.shift}) h.add(std::uint64_t{v});
  h.add(std::uint64_t{geom.all_orders ? 1u : 0u});
  h.add(std::uint64_t{optics.orders});
  for (double v : optics.diff_sens) h.add(v);
  for (double v : optics.illum) h.add(v);
  h.add(optics.sigma_psf);
  return h.value();
}

void save_system_matrix(const SparseSystemMatrix& h, std::uint64_t key,
                        const std::filesystem::path& path) {
  require_little_endian();
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + tmp.string());
    out.write(kMatrixMagic, 4);
    const std::uint64_t header[] = {1, key, h.image_side(), h.cube_shape().height,
                                    h.cube_shape().width, h.cube_shape().channels, h.nnz()};
    write_raw(out, header, std::size(header));
    write_raw(out, h.col_ptr().data(), h.col_ptr().size());
    write_raw(out, h.row_indices().data(), h.nnz());
    write_raw(out, h.values().data(), h.nnz());
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename into " + path.string());
}

SparseSystemMatrix load_system_matrix(const std::filesystem::path& path, std::uint64_t key) {
  require_little_endian();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMatrixMagic, 4) != 0) throw FormatError(path.string() + ": bad magic");
  std::uint64_t header[7] = {};
  read_raw(in, header, 7, path);
  if (header[0] != 1) throw FormatError(path.string() + ": unsupported matrix cache version");
  if (header[1] != key) throw FormatError(path.string() + ": cached matrix was built for different parameters");
  const CubeShape shape{header[3], header[4], header[5]};
  const std::size_t nnz = header[6];
  const auto file_size = std::filesystem::file_size(path);
  const std::size_t expected = 4 + 7 * 8 + (shape.voxels() + 1) * 8 + nnz * 12;
  if (file_size != expected) throw FormatError(path.string() + ": matrix cache size mismatch");
  std::vector<std::uint64_t> col_ptr(shape.voxels() + 1);
  std::vector<std::uint32_t> rows(nnz);
  std::vector<double> values(nnz);
  read_raw(in, col_ptr.data(), col_ptr.size(), path);
  read_raw(in, rows.data(), nnz, path);
  read_raw(in, values.data(), nnz, path);
  return SparseSystemMatrix(header[2], shape, std::move(col_ptr), std::move(rows), std::move(values));
}

}  // namespace ctis

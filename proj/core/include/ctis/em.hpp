#pragma once

// Multiplicative EM (Richardson-Lucy form) reconstruction of a cube from a
// CTIS image:
//
//   f(k+1) = f(k) / colsum(H)  ⊙  H^T ( g / (H f(k)) )
//
// The starting estimate is pluggable: all ones, the back-projection H^T g, or
// an external HCUB file (typically a network prediction).

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctis/cube.hpp"
#include "ctis/sysmat.hpp"

namespace ctis {

enum class InitMode { ones, backprojection, external };

struct EmConfig {
  std::size_t iterations = 20;
  InitMode init = InitMode::ones;
  std::filesystem::path init_path;  // read when init == external
  /// Lower bound applied to the predicted pixel (H f)_j in the ratio.
  double epsilon = 1e-12;
  bool record_trace = false;

  void validate() const;
};

struct TraceRecord {
  std::size_t iteration = 0;  // 0 is the starting estimate
  double data_residual = 0.0;  // mean((g - H f)^2)
  std::optional<double> mse_vs_truth;
};

struct EmResult {
  HyperCube cube;
  std::vector<TraceRecord> trace;  // empty unless record_trace
};

/// Starting estimate for `config.init`. External cubes must match H's cube
/// shape; negative values are rejected when the file is parsed.
std::vector<double> init_cube(const SparseSystemMatrix& h, const CtisImage& g, const EmConfig& config);

/// One EM update. Pixels with g_j == 0 contribute a zero ratio; voxels whose
/// column sum is zero are set to zero.
std::vector<double> em_update(const SparseSystemMatrix& h, std::span<const double> g,
                              std::span<const double> estimate, double epsilon);

/// em_update with H f already computed.
std::vector<double> em_update_from_prediction(const SparseSystemMatrix& h,
                                              std::span<const double> g,
                                              std::span<const double> estimate,
                                              std::span<const double> predicted, double epsilon);

/// Runs `config.iterations` updates from an explicit starting estimate.
EmResult em_iterate(const SparseSystemMatrix& h, std::span<const double> g,
                    std::vector<double> initial, const EmConfig& config,
                    const std::optional<HyperCube>& truth = std::nullopt);

/// Full reconstruction: init_cube then em_iterate.
EmResult em_reconstruct(const SparseSystemMatrix& h, const CtisImage& g, const EmConfig& config,
                        const std::optional<HyperCube>& truth = std::nullopt);

/// CSV with header `iteration,data_residual,mse_vs_truth`; the last column is
/// empty when no ground truth was supplied.
std::string format_trace_csv(std::span<const TraceRecord> trace);
void write_trace_csv(std::span<const TraceRecord> trace, const std::filesystem::path& path);

}  // namespace ctis

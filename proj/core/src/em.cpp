#include "ctis/em.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "ctis/error.hpp"
#include "ctis/metrics.hpp"

namespace ctis {
namespace {

double data_residual(std::span<const double> g, std::span<const double> predicted) {
  double acc = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double d = g[j] - predicted[j];
    acc += d * d;
  }
  return acc / static_cast<double>(g.size());
}

TraceRecord make_record(std::size_t iteration, std::span<const double> g,
                        std::span<const double> predicted, std::span<const double> estimate,
                        const std::optional<std::vector<double>>& truth) {
  TraceRecord rec;
  rec.iteration = iteration;
  rec.data_residual = data_residual(g, predicted);
  if (truth) rec.mse_vs_truth = mse(estimate, *truth);
  return rec;
}

}  // namespace

void EmConfig::validate() const {
  if (iterations < 1) throw ValueError("em: iterations must be >= 1");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ValueError("em: epsilon must be > 0");
  if (init == InitMode::external && init_path.empty()) throw ValueError("em: external init needs a cube path");
}

std::vector<double> init_cube(const SparseSystemMatrix& h, const CtisImage& g, const EmConfig& config) {
  if (g.size() != h.rows()) throw_dimension("em: image pixels", h.rows(), g.size());
  switch (config.init) {
    case InitMode::ones:
      return std::vector<double>(h.cols(), 1.0);
    case InitMode::backprojection: {
      const auto gd = g.to_doubles();
      return h.rmatvec(gd);
    }
    case InitMode::external: {
      const HyperCube cube = load_cube(config.init_path);
      const CubeShape& want = h.cube_shape();
      if (cube.shape() != want) {
        throw DimensionError("em: initial cube dimensions " + std::to_string(cube.height()) + "x" +
                             std::to_string(cube.width()) + "x" + std::to_string(cube.channels()) +
                             " do not match the system matrix, expected " + std::to_string(want.height) + "x" +
                             std::to_string(want.width) + "x" + std::to_string(want.channels));
      }
      return cube.to_doubles();
    }
  }
  throw ValueError("em: unknown init mode");
}

std::vector<double> em_update(const SparseSystemMatrix& h, std::span<const double> g,
                              std::span<const double> estimate, double epsilon) {
  if (g.size() != h.rows()) throw_dimension("em: image pixels", h.rows(), g.size());
  if (estimate.size() != h.cols()) throw_dimension("em: estimate voxels", h.cols(), estimate.size());
  const auto predicted = h.matvec(estimate);
  return em_update_from_prediction(h, g, estimate, predicted, epsilon);
}

std::vector<double> em_update_from_prediction(const SparseSystemMatrix& h,
                                              std::span<const double> g,
                                              std::span<const double> estimate,
                                              std::span<const double> predicted, double epsilon) {
  std::vector<double> ratio(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    ratio[j] = g[j] == 0.0 ? 0.0 : g[j] / std::max(predicted[j], epsilon);
  }
  auto next = h.rmatvec(ratio);
  const auto col_sums = h.col_sums();
  for (std::size_t i = 0; i < next.size(); ++i) {
    next[i] = col_sums[i] > 0.0 ? estimate[i] / col_sums[i] * next[i] : 0.0;
    if (!std::isfinite(next[i])) {
      throw ValueError("em: non-finite estimate at voxel " + std::to_string(i));
    }
  }
  return next;
}

EmResult em_iterate(const SparseSystemMatrix& h, std::span<const double> g,
                    std::vector<double> initial, const EmConfig& config,
                    const std::optional<HyperCube>& truth) {
  config.validate();
  if (g.size() != h.rows()) throw_dimension("em: image pixels", h.rows(), g.size());
  if (initial.size() != h.cols()) throw_dimension("em: initial estimate voxels", h.cols(), initial.size());
  for (double v : g) {
    if (!std::isfinite(v) || v < 0.0) throw ValueError("em: image values must be finite and >= 0");
  }
  for (double v : initial) {
    if (!std::isfinite(v) || v < 0.0) throw ValueError("em: initial estimate must be finite and >= 0");
  }
  std::optional<std::vector<double>> truth_values;
  if (truth) {
    if (truth->shape() != h.cube_shape()) throw DimensionError("em: ground truth shape differs from H");
    truth_values = truth->to_doubles();
  }

  EmResult result;
  std::vector<double> estimate = std::move(initial);
  for (std::size_t k = 0; k < config.iterations; ++k) {
    const auto predicted = h.matvec(estimate);
    if (config.record_trace) result.trace.push_back(make_record(k, g, predicted, estimate, truth_values));
    estimate = em_update_from_prediction(h, g, estimate, predicted, config.epsilon);
  }
  if (config.record_trace) {
    const auto predicted = h.matvec(estimate);
    result.trace.push_back(make_record(config.iterations, g, predicted, estimate, truth_values));
  }
  result.cube = HyperCube::from_doubles(h.cube_shape(), estimate);
  return result;
}

EmResult em_reconstruct(const SparseSystemMatrix& h, const CtisImage& g, const EmConfig& config,
                        const std::optional<HyperCube>& truth) {
  config.validate();
  auto initial = init_cube(h, g, config);
  const auto gd = g.to_doubles();
  return em_iterate(h, gd, std::move(initial), config, truth);
}

std::string format_trace_csv(std::span<const TraceRecord> trace) {
  std::string out = "iteration,data_residual,mse_vs_truth\n";
  char buf[96];
  for (const auto& rec : trace) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,", rec.iteration, rec.data_residual);
    out += buf;
    if (rec.mse_vs_truth) {
      std::snprintf(buf, sizeof buf, "%.17g", *rec.mse_vs_truth);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void write_trace_csv(std::span<const TraceRecord> trace, const std::filesystem::path& path) {
  const std::string text = format_trace_csv(trace);
  write_file_atomic(path, text);
}

}  // namespace ctis

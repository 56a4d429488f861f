// Acceptance suite: one PASS/FAIL line per primary criterion. Exit status is
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "ctis/calib.hpp"
#include "ctis/em.hpp"
#include "ctis/metrics.hpp"
#include "ctis/pipeline.hpp"
#include "ctis/simulator.hpp"
#include "ctis/sysmat.hpp"
#include "oracles.hpp"

using namespace ctis;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

template <class F>
void criterion(const char* name, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%s  %-28s %s (%.2fs)\n", out.pass ? "PASS" : "FAIL", name, out.detail.c_str(), secs);
  std::fflush(stdout);
  if (!out.pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double round1(double v) { return std::round(v * 10.0) / 10.0; }

// 6x6x3, b1 = 2, b2 = 0, shift = 1, no blur, random positive optics.
struct EmInstance {
  SparseSystemMatrix h;
  HyperCube truth;
  std::vector<double> g;
};

EmInstance em_instance(std::mt19937_64& rng, float truth_max) {
  GeometryParams geom;
  geom.x = geom.y = 6;
  geom.z = 3;
  geom.b1 = 2;
  geom.b2 = 0;
  geom.shift = 1;
  EmInstance in;
  in.h = build_h(geom, oracle::random_optics(geom, 0.0, rng));
  in.truth = oracle::random_cube(geom.cube_shape(), rng, truth_max);
  in.g = in.h.matvec(in.truth.to_doubles());
  return in;
}

struct FluxStats {
  double stated = 0.0;     // against sum(g) over every pixel
  double reachable = 0.0;  // against sum(g) over pixels with (H f)_j > 0
};

// Largest relative violations of sum(colsum * f_k) = sum(g) over k >= 1.
FluxStats flux_violation(const SparseSystemMatrix& h, std::span<const double> g, std::vector<double> f,
                         std::size_t iterations) {
  const double flux = std::accumulate(g.begin(), g.end(), 0.0);
  FluxStats worst;
  for (std::size_t k = 0; k < iterations; ++k) {
    const auto predicted = h.matvec(f);
    double reachable = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (predicted[j] > 0.0) reachable += g[j];
    }
    f = em_update_from_prediction(h, g, f, predicted, 1e-12);
    double weighted = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) weighted += h.col_sums()[j] * f[j];
    worst.stated = std::max(worst.stated, std::abs(weighted - flux) / flux);
    worst.reachable = std::max(worst.reachable, std::abs(weighted - reachable) / reachable);
  }
  return worst;
}

void merge(FluxStats& into, const FluxStats& s) {
  into.stated = std::max(into.stated, s.stated);
  into.reachable = std::max(into.reachable, s.reachable);
}

FluxStats flux_noiseless;
FluxStats flux_noisy;

// Vertical-ish edge through column `pivot` at row `pivot_row`, tilted by
// `degrees`; pixels are point-sampled at their centres, then blurred.
CtisImage slanted_edge(std::size_t side, double pivot, double pivot_row, double degrees, double sigma) {
  const double slope = std::tan(degrees * 3.14159265358979323846 / 180.0);
  std::vector<float> v(side * side);
  for (std::size_t r = 0; r < side; ++r) {
    const double edge = pivot + (static_cast<double>(r) - pivot_row) * slope;
    for (std::size_t c = 0; c < side; ++c) v[r * side + c] = static_cast<double>(c) >= edge ? 200.0f : 20.0f;
  }
  return convolve_psf(CtisImage(side, std::move(v)), sigma);
}

double planck_independent(double wl_nm, double t) {
  const double h = 6.62607015e-34;
  const double c = 299792458.0;
  const double k = 1.380649e-23;
  const double l = wl_nm * 1e-9;
  return 2.0 * h * c * c / std::pow(l, 5) / std::expm1(h * c / (l * k * t));
}

}  // namespace

int main() {
  criterion("geometry", [] {
    GeometryParams g;
    const std::size_t a = image_side(g);
    g.z = 100;
    const std::size_t b = image_side(g);
    return Outcome{a == 450 && b == 750, "q=" + std::to_string(a) + "," + std::to_string(b)};
  });

  criterion("oracle_equivalence", [] {
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<std::size_t> side(1, 8);
    std::uniform_int_distribution<std::size_t> depth(1, 4);
    std::uniform_int_distribution<std::size_t> gap(0, 3);
    double worst_sim = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      GeometryParams g;
      g.x = g.y = side(rng);
      g.z = depth(rng);
      g.b1 = gap(rng);
      g.b2 = gap(rng);
      g.shift = 1 + gap(rng) % 2;
      g.all_orders = trial % 4 != 3;
      const auto optics = oracle::random_optics(g, trial % 2 ? 1.04 : 0.5, rng);
      const auto cube = oracle::random_cube(g.cube_shape(), rng, 255.0f);
      const auto sim = simulate(cube, g, optics, 0).to_doubles();
      const auto hf = build_h(g, optics).matvec(cube.to_doubles());
      for (std::size_t i = 0; i < sim.size(); ++i) {
        if (sim[i] == hf[i]) continue;
        worst_sim = std::max(worst_sim, std::abs(sim[i] - hf[i]) / std::abs(hf[i]));
      }
    }
    double worst_dense = 0.0;
    GeometryParams g;
    g.x = g.y = 4;
    g.z = 2;
    g.b1 = 1;
    g.b2 = 0;
    g.shift = 1;
    const auto optics = oracle::random_optics(g, 1.04, rng);
    const auto h = build_h(g, optics);
    const auto dense = oracle::dense_h(g, optics);
    for (int trial = 0; trial < 20; ++trial) {
      const auto f = oracle::random_cube(g.cube_shape(), rng, 255.0f).to_doubles();
      worst_dense = std::max(worst_dense, oracle::max_rel_diff(h.matvec(f), dense.multiply(f)));
    }
    return Outcome{worst_sim <= 1e-5 && worst_dense <= 1e-9,
                   fmt("sim-vs-H max rel %.2e", worst_sim) + fmt(", H-vs-dense max rel %.2e", worst_dense)};
  });

  criterion("em_fixed_point", [] {
    std::mt19937_64 rng(202);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const auto in = em_instance(rng, 255.0f);
      const auto f = in.truth.to_doubles();
      EmConfig config;
      config.iterations = 20;
      const auto out = em_iterate(in.h, in.g, f, config).cube.to_doubles();
      for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] > 0.0) worst = std::max(worst, std::abs(out[i] - f[i]) / f[i]);
      }
      merge(flux_noiseless, flux_violation(in.h, in.g, f, 20));
    }
    return Outcome{worst <= 1e-6, fmt("20 instances, max rel change %.2e", worst)};
  });

  criterion("em_convergence_noiseless", [] {
    std::mt19937_64 rng(303);
    int ok = 0;
    double worst_ratio = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const auto in = em_instance(rng, 255.0f);
      EmConfig config;
      config.iterations = 20;
      config.record_trace = true;
      const auto res = em_iterate(in.h, in.g, std::vector<double>(in.h.cols(), 1.0), config, in.truth);
      bool monotone = true;
      for (std::size_t k = 1; k < res.trace.size(); ++k) {
        monotone = monotone && *res.trace[k].mse_vs_truth <= *res.trace[k - 1].mse_vs_truth;
      }
      const double ratio = *res.trace.back().mse_vs_truth / *res.trace.front().mse_vs_truth;
      worst_ratio = std::max(worst_ratio, ratio);
      if (monotone && ratio <= 0.1) ++ok;
      merge(flux_noiseless, flux_violation(in.h, in.g, std::vector<double>(in.h.cols(), 1.0), 20));
    }
    return Outcome{ok == 20, std::to_string(ok) + "/20 monotone with >=10x reduction" +
                                 fmt(", worst final/initial %.3g", worst_ratio)};
  });

  criterion("em_noise_divergence", [] {
    std::mt19937_64 rng(404);
    int interior = 0;
    for (int trial = 0; trial < 20; ++trial) {
      // Intensities of order 1, so that sigma = 0.5 noise is significant.
      const auto in = em_instance(rng, 2.0f);
      const auto noisy = add_noise_values(in.g, 0.5, 5000 + static_cast<std::uint64_t>(trial));
      EmConfig config;
      config.iterations = 30;
      config.record_trace = true;
      const auto res = em_iterate(in.h, noisy, std::vector<double>(in.h.cols(), 1.0), config, in.truth);
      std::size_t best = 0;
      for (std::size_t k = 1; k < res.trace.size(); ++k) {
        if (*res.trace[k].mse_vs_truth < *res.trace[best].mse_vs_truth) best = k;
      }
      if (best > 0 && best + 1 < res.trace.size()) ++interior;
      merge(flux_noisy, flux_violation(in.h, noisy, std::vector<double>(in.h.cols(), 1.0), 30));
    }
    return Outcome{interior >= 16, std::to_string(interior) + "/20 with a strict interior minimum"};
  });

  criterion("em_flux_conservation", [] {
    const double worst = std::max(flux_noiseless.stated, flux_noisy.stated);
    return Outcome{worst <= 1e-5, fmt("every k>=1: noiseless max rel %.2e", flux_noiseless.stated) +
                                      fmt(", noisy max rel %.2e", flux_noisy.stated) +
                                      fmt(" (noisy, reachable pixels only: %.2e)", flux_noisy.reachable)};
  });

  criterion("psf_calibration", [] {
    // 2 degree edge passing midway between pixel centres 47 and 48 at the
    // ROI's middle row; 10-row ROI.
    const auto img = slanted_edge(96, 47.5, 48.0, 2.0, 1.04);
    const auto fit = estimate_psf(img, {43, 28, 10, 40});
    // Sub-pixel placement sweep, reported for information.
    double lo = 1e9;
    double hi = 0.0;
    for (int k = 0; k < 20; ++k) {
      const auto s = estimate_psf(slanted_edge(96, 48.0 + 0.05 * k, 48.0, 2.0, 1.04), {43, 28, 10, 40});
      lo = std::min(lo, s.sigma);
      hi = std::max(hi, s.sigma);
    }
    return Outcome{fit.sigma >= 0.99 && fit.sigma <= 1.09 && fit.r_squared > 0.99,
                   fmt("sigma=%.4f", fit.sigma) + fmt(" r2=%.5f", fit.r_squared) +
                       fmt(" (offset sweep sigma %.3f", lo) + fmt("..%.3f)", hi)};
  });

  criterion("blackbody_fit", [] {
    std::string detail;
    bool pass = true;
    for (double t : {2952.0, 3000.0}) {
      std::vector<double> wl;
      std::vector<double> val;
      for (double w = 200.0; w <= 720.0; w += 1.0) {
        wl.push_back(w);
        val.push_back(planck_independent(w, t) * 1e-13);
      }
      const auto fit = fit_blackbody(SpectralCurve(wl, val));
      pass = pass && std::abs(fit.temperature_k - t) <= 5.0;
      detail += fmt("%.0fK->", t) + fmt("%.2fK ", fit.temperature_k);
    }
    return Outcome{pass, detail};
  });

  criterion("metrics_psnr_table", [] {
    const double a = psnr(121.50);
    const double b = psnr(0.91);
    const bool pass = round1(a) == 27.3 && round1(b) == 48.6;
    return Outcome{pass, fmt("psnr(121.50)=%.4f", a) + fmt(" psnr(0.91)=%.4f", b) + " (expected 27.3, 48.6)"};
  });

  criterion("pipeline_counts", [] {
    const auto dir = std::filesystem::temp_directory_path() / "ctis_acceptance_sources";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    std::mt19937_64 rng(505);
    std::vector<std::filesystem::path> sources;
    for (int i = 0; i < 171; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "cube_%03d.hcub", i);
      sources.push_back(dir / name);
      save_cube(oracle::random_cube({16, 16, kSourceChannels}, rng, 255.0f), sources.back());
    }
    GeometryParams geom;
    geom.x = geom.y = 16;
    geom.z = 25;
    geom.b1 = 0;
    geom.shift = 1;
    DatasetConfig config;
    config.crop_size = 16;
    config.crops_per_source = 768;
    config.write_files = false;
    config.fractions = {91998.0 / 131328.0, 19665.0 / 131328.0, 19665.0 / 131328.0};
    const auto result = generate_dataset(sources, geom, OpticalParams::uniform(geom, 1.04, 0.44), config);
    std::filesystem::remove_all(dir);
    const auto& m = result.manifest;
    const std::size_t n = m.entries.size();
    const bool pass = result.errors.empty() && n == 131328 && m.count(Split::train) == 91998 &&
                      m.count(Split::val) == 19665 && m.count(Split::test) == 19665;
    return Outcome{pass, std::to_string(n) + " rows: " + std::to_string(m.count(Split::train)) + "/" +
                             std::to_string(m.count(Split::val)) + "/" + std::to_string(m.count(Split::test))};
  });

  criterion("tile_round_trip", [] {
    std::mt19937_64 rng(606);
    std::uniform_real_distribution<float> u(0.0f, 255.0f);
    bool pass = true;
    std::string detail;
    for (std::size_t q : {450u, 750u}) {
      std::vector<float> v(q * q);
      for (float& x : v) x = u(rng);
      const CtisImage img(q, std::move(v));
      const auto tiles = split_tiles(img);
      pass = pass && tiles[0].side() == q / 3 && reassemble_tiles(tiles) == img;
      detail += std::to_string(q) + "->9x" + std::to_string(tiles[0].side()) + " ";
    }
    return Outcome{pass, detail};
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

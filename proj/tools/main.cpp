// ctis: command-line front end for simulation, reconstruction, calibration
// and dataset preparation.
//
// Exit status: 0 on success, 1 for domain errors (bad files, mismatched
// dimensions, invalid values), 2 for usage errors.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ctis/calib.hpp"
#include "ctis/cube.hpp"
#include "ctis/em.hpp"
#include "ctis/error.hpp"
#include "ctis/metrics.hpp"
#include "ctis/parallel.hpp"
#include "ctis/pipeline.hpp"
#include "ctis/simulator.hpp"
#include "ctis/spectral.hpp"
#include "ctis/sysmat.hpp"
#include "options.hpp"
#include "png.hpp"

namespace fs = std::filesystem;
using namespace ctis;
using namespace ctis::tools;

namespace {

using Action = std::function<void()>;

// ---------------------------------------------------------------- simulate

struct SimulateFlags {
  std::string cube;
  std::string out;
  GeometryFlags geom;
  OpticsFlags optics;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

Action add_simulate(CLI::App& app) {
  auto f = std::make_shared<SimulateFlags>();
  auto* cmd = app.add_subcommand("simulate", "Render a CTIS image (HIMG) from a cube (HCUB)");
  cmd->add_option("--cube", f->cube, "Input HCUB")->required();
  cmd->add_option("--out", f->out, "Output HIMG")->required();
  add_geometry_flags(*cmd, f->geom);
  add_optics_flags(*cmd, f->optics);
  cmd->add_option("--seed", f->seed, "Noise seed")->capture_default_str();
  add_threads_flag(*cmd, f->threads);
  return [f, cmd] {
    if (!*cmd) return;
    set_thread_count(f->threads);
    const auto cube = load_cube(f->cube);
    const auto geom = f->geom.resolve(cube.shape());
    const auto optics = f->optics.resolve(geom);
    const auto image = simulate(cube, geom, optics, f->seed);
    save_image(image, f->out);
    std::printf("%s: %zux%zu\n", f->out.c_str(), image.side(), image.side());
  };
}

// ------------------------------------------------------------- reconstruct

struct ReconstructFlags {
  std::string image;
  std::string out;
  std::size_t iters = 20;
  std::string init = "ones";
  std::string truth;
  std::string trace;
  std::string h_cache;
  std::size_t max_nnz = BuildOptions{}.max_nnz;
  GeometryFlags geom;
  OpticsFlags optics;
  std::size_t threads = 0;
};

SparseSystemMatrix system_matrix(const GeometryParams& geom, const OpticalParams& optics,
                                 const std::string& cache, std::size_t max_nnz) {
  const auto key = system_matrix_key(geom, optics);
  if (!cache.empty() && fs::exists(cache)) {
    try {
      return load_system_matrix(cache, key);
    } catch (const FormatError& e) {
      std::fprintf(stderr, "h-cache: %s; rebuilding\n", e.what());
    }
  }
  auto h = build_h(geom, optics, BuildOptions{max_nnz});
  if (!cache.empty()) save_system_matrix(h, key, cache);
  return h;
}

Action add_reconstruct(CLI::App& app) {
  auto f = std::make_shared<ReconstructFlags>();
  auto* cmd = app.add_subcommand("reconstruct", "EM reconstruction of a cube from a CTIS image");
  cmd->add_option("--image", f->image, "Input HIMG")->required();
  cmd->add_option("--out", f->out, "Output HCUB")->required();
  cmd->add_option("--iters", f->iters, "EM iterations (hybrid recipe: 10)")->capture_default_str();
  cmd->add_option("--init", f->init, "ones | backproject | path to an HCUB starting cube")
      ->capture_default_str();
  cmd->add_option("--truth", f->truth, "Ground-truth HCUB; fills the trace's mse column");
  cmd->add_option("--trace", f->trace, "Per-iteration trace CSV");
  cmd->add_option("--h-cache", f->h_cache, "System matrix cache file (rebuilt when stale)");
  cmd->add_option("--max-nnz", f->max_nnz, "Refuse to build larger system matrices")->capture_default_str();
  add_geometry_flags(*cmd, f->geom);
  add_optics_flags(*cmd, f->optics, false);
  add_threads_flag(*cmd, f->threads);
  return [f, cmd] {
    if (!*cmd) return;
    set_thread_count(f->threads);
    const auto image = load_image(f->image);
    std::optional<HyperCube> truth;
    if (!f->truth.empty()) truth = load_cube(f->truth);
    const auto geom = f->geom.resolve(truth ? truth->shape() : CubeShape{100, 100, 25});
    if (image.side() != image_side(geom)) {
      throw DimensionError(f->image + ": image side " + std::to_string(image.side()) +
                           " does not match the geometry, expected " + std::to_string(image_side(geom)));
    }
    auto optics = f->optics.resolve(geom);
    optics.noise_sigma = 0.0;
    const auto h = system_matrix(geom, optics, f->h_cache, f->max_nnz);

    EmConfig config;
    config.iterations = f->iters;
    config.record_trace = !f->trace.empty() || truth.has_value();
    if (f->init == "ones") {
      config.init = InitMode::ones;
    } else if (f->init == "backproject") {
      config.init = InitMode::backprojection;
    } else {
      config.init = InitMode::external;
      config.init_path = f->init;
    }
    const auto result = em_reconstruct(h, image, config, truth);
    save_cube(result.cube, f->out);
    if (!f->trace.empty()) write_trace_csv(result.trace, f->trace);
    if (!result.trace.empty()) {
      const auto& last = result.trace.back();
      std::printf("iterations=%zu data_residual=%.6g", last.iteration, last.data_residual);
      if (last.mse_vs_truth) std::printf(" mse=%.6g", *last.mse_vs_truth);
      std::printf("\n");
    }
  };
}

// ----------------------------------------------------------- calibrate-psf

Action add_calibrate_psf(CLI::App& app) {
  struct Flags {
    std::string image;
    std::vector<std::size_t> roi;
  };
  auto f = std::make_shared<Flags>();
  auto* cmd = app.add_subcommand("calibrate-psf", "Slanted-edge PSF sigma from a HIMG frame");
  cmd->add_option("--image", f->image, "Input HIMG")->required();
  cmd->add_option("--roi", f->roi, "row,col,height,width around a near-vertical edge")
      ->required()
      ->delimiter(',')
      ->expected(4);
  return [f, cmd] {
    if (!*cmd) return;
    const auto image = load_image(f->image);
    const Roi roi{f->roi[0], f->roi[1], f->roi[2], f->roi[3]};
    std::printf("%s\n", format_fit(estimate_psf(image, roi)).c_str());
  };
}

// ----------------------------------------------------------- fit-blackbody

Action add_fit_blackbody(CLI::App& app) {
  struct Flags {
    std::string spectrum;
    BlackbodyOptions options;
  };
  auto f = std::make_shared<Flags>();
  auto* cmd = app.add_subcommand("fit-blackbody", "Fit a Planck curve to an illuminant spectrum");
  cmd->add_option("--spectrum", f->spectrum, "CSV with wavelength_nm,value")->required();
  cmd->add_option("--t-min", f->options.t_min, "Lower temperature bound (K)")->capture_default_str();
  cmd->add_option("--t-max", f->options.t_max, "Upper temperature bound (K)")->capture_default_str();
  return [f, cmd] {
    if (!*cmd) return;
    std::printf("%s\n", format_fit(fit_blackbody(read_spectrum_csv(f->spectrum), f->options)).c_str());
  };
}

// ------------------------------------------------------------- sensitivity

struct FrameRecord {
  double wavelength = 0.0;
  double exposure_us = 0.0;
  double gain = 0.0;
  double correction = 0.0;
  fs::path image;
  fs::path dark;
};

// Whitespace-separated lines: wavelength exposure_us gain correction image dark.
// Relative paths resolve against the list's directory; '#' starts a comment.
std::vector<FrameRecord> read_frame_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<FrameRecord> frames;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = line.substr(0, line.find('#'));
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    FrameRecord r;
    std::string image, dark, extra;
    if (!(fields >> r.wavelength >> r.exposure_us >> r.gain >> r.correction >> image >> dark) || (fields >> extra)) {
      throw FormatError(path.string() + ":" + std::to_string(number) +
                        ": expected `wavelength exposure_us gain correction image dark`");
    }
    r.image = fs::path(image).is_absolute() ? fs::path(image) : path.parent_path() / image;
    r.dark = fs::path(dark).is_absolute() ? fs::path(dark) : path.parent_path() / dark;
    frames.push_back(std::move(r));
  }
  if (frames.empty()) throw FormatError(path.string() + ": no frames");
  return frames;
}

Action add_sensitivity(CLI::App& app) {
  struct Flags {
    std::string counts;
    std::string frames;
    std::string boxes;
    std::string out;
  };
  auto f = std::make_shared<Flags>();
  auto* cmd = app.add_subcommand("sensitivity", "Per-order diffraction sensitivity from monochromator data");
  auto* input = cmd->add_option_group("input", "Photon counts or raw frames");
  input->add_option("--counts", f->counts, "CSV: wavelength_nm,exposure_us,gain,correction,pc0,pc1,...");
  auto* frames = input->add_option("--frames", f->frames,
                                   "Frame list: wavelength exposure_us gain correction image.himg dark.himg");
  input->require_option(1);
  auto* boxes = cmd->add_option("--boxes", f->boxes, "CSV: row,col,height,width, one spot box per order");
  boxes->needs(frames);
  frames->needs(boxes);
  cmd->add_option("--out", f->out, "Output sensitivity CSV")->required();
  return [f, cmd] {
    if (!*cmd) return;
    std::vector<double> wavelengths, exposures, gains, corrections, photons;
    std::size_t orders = 0;
    if (!f->counts.empty()) {
      const auto table = read_csv(f->counts);
      if (table.header.size() < 5) throw FormatError(f->counts + ": need at least one photon-count column");
      orders = table.header.size() - 4;
      wavelengths = table.column(0);
      exposures = table.column(1);
      gains = table.column(2);
      corrections = table.column(3);
      for (std::size_t s = 0; s < orders; ++s) {
        const auto column = table.column(4 + s);
        photons.insert(photons.end(), column.begin(), column.end());
      }
    } else {
      const auto records = read_frame_list(f->frames);
      const auto box_table = read_csv(f->boxes);
      if (box_table.header.size() != 4) throw FormatError(f->boxes + ": expected row,col,height,width");
      std::vector<Roi> boxes;
      for (const auto& row : box_table.rows) {
        boxes.push_back({static_cast<std::size_t>(row[0]), static_cast<std::size_t>(row[1]),
                         static_cast<std::size_t>(row[2]), static_cast<std::size_t>(row[3])});
      }
      orders = boxes.size();
      photons.assign(orders * records.size(), 0.0);
      for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        wavelengths.push_back(r.wavelength);
        exposures.push_back(r.exposure_us);
        gains.push_back(r.gain);
        corrections.push_back(r.correction);
        const auto image = load_image(r.image);
        const auto dark = load_image(r.dark);
        for (std::size_t s = 0; s < orders; ++s) {
          photons[s * records.size() + i] = spot_photon_count(image, dark, boxes[s]);
        }
      }
    }
    const auto table = diffraction_sensitivity(wavelengths, photons, exposures, gains, corrections);
    write_sensitivity_csv(table, f->out);
    std::printf("%s: %zu orders x %zu wavelengths\n", f->out.c_str(), table.orders(), table.samples());
  };
}

// ----------------------------------------------------------------- dataset

std::vector<fs::path> expand_sources(const std::vector<std::string>& inputs) {
  std::vector<fs::path> sources;
  for (const auto& input : inputs) {
    if (fs::is_directory(input)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(input)) {
        if (entry.is_regular_file() && entry.path().extension() == ".hcub") found.push_back(entry.path());
      }
      std::sort(found.begin(), found.end());
      sources.insert(sources.end(), found.begin(), found.end());
    } else {
      sources.emplace_back(input);
    }
  }
  if (sources.empty()) throw ValueError("no source cubes found");
  return sources;
}

Action add_dataset(CLI::App& app) {
  struct Flags {
    std::vector<std::string> sources;
    std::string out_dir;
    DatasetConfig config;
    std::vector<std::string> unseen;
    bool manifest_only = false;
    GeometryFlags geom;
    OpticsFlags optics;
    std::size_t threads = 0;
  };
  auto f = std::make_shared<Flags>();
  auto* cmd = app.add_subcommand("dataset", "Bin, crop and simulate source cubes into a training set");
  cmd->add_option("--sources", f->sources, "216-channel HCUB files or directories of them")->required();
  cmd->add_option("--out-dir", f->out_dir, "Output directory (cubes/, images/, manifest.csv)")->required();
  cmd->add_option("--crops", f->config.crops_per_source, "Crops per source")->capture_default_str();
  cmd->add_option("--crop-size", f->config.crop_size, "Crop side in pixels")->capture_default_str();
  cmd->add_option("--channels", f->config.target_channels, "Binned channels: 25 or 100")->capture_default_str();
  cmd->add_option("--crop-seed", f->config.crop_seed)->capture_default_str();
  cmd->add_option("--noise-seed", f->config.noise_seed)->capture_default_str();
  cmd->add_option("--partition-seed", f->config.partition_seed)->capture_default_str();
  cmd->add_option("--train", f->config.fractions.train, "Train fraction")->capture_default_str();
  cmd->add_option("--val", f->config.fractions.val, "Validation fraction")->capture_default_str();
  cmd->add_option("--test", f->config.fractions.test, "Test fraction")->capture_default_str();
  cmd->add_option("--unseen", f->unseen, "Source stems held out as `unseen`");
  cmd->add_flag("--manifest-only", f->manifest_only, "Write only manifest.csv");
  add_geometry_flags(*cmd, f->geom, false);
  add_optics_flags(*cmd, f->optics);
  add_threads_flag(*cmd, f->threads);
  return [f, cmd] {
    if (!*cmd) return;
    set_thread_count(f->threads);
    const auto sources = expand_sources(f->sources);
    const auto geom = f->geom.resolve({f->config.crop_size, f->config.crop_size, f->config.target_channels});
    const auto optics = f->optics.resolve(geom);
    auto config = f->config;
    config.output_dir = f->out_dir;
    config.unseen_sources = {f->unseen.begin(), f->unseen.end()};
    config.write_files = !f->manifest_only;
    const auto result = generate_dataset(sources, geom, optics, config);
    if (f->manifest_only) {
      fs::create_directories(f->out_dir);
      write_manifest_csv(result.manifest, fs::path(f->out_dir) / "manifest.csv");
    }
    const auto& m = result.manifest;
    std::printf("rows=%zu train=%zu val=%zu test=%zu unseen=%zu\n", m.entries.size(), m.count(Split::train),
                m.count(Split::val), m.count(Split::test), m.count(Split::unseen));
    for (const auto& e : result.errors) std::fprintf(stderr, "error: %s\n", e.c_str());
    if (!result.errors.empty()) {
      throw Error(std::to_string(result.errors.size()) + " of " + std::to_string(sources.size()) +
                  " sources failed");
    }
  };
}

// ------------------------------------------------------------------- tiles

Action add_tiles(CLI::App& app) {
  struct Flags {
    std::string image;
    std::string out_dir;
  };
  auto f = std::make_shared<Flags>();
  auto* cmd = app.add_subcommand("tiles", "Split a CTIS image into its 3x3 tiles");
  cmd->add_option("--image", f->image, "Input HIMG")->required();
  cmd->add_option("--out-dir", f->out_dir, "Output directory (default: next to the image)");
  return [f, cmd] {
    if (!*cmd) return;
    const fs::path input(f->image);
    const auto tiles = split_tiles(load_image(input));
    const fs::path dir = f->out_dir.empty() ? input.parent_path() : fs::path(f->out_dir);
    if (!dir.empty()) fs::create_directories(dir);
    for (std::size_t k = 0; k < tiles.size(); ++k) {
      const auto path = dir / (input.stem().string() + "_tile" + std::to_string(k) + ".himg");
      save_image(tiles[k], path);
      std::printf("%s\n", path.string().c_str());
    }
  };
}

// ----------------------------------------------------------------- metrics

Action add_metrics(CLI::App& app) {
  struct Flags {
    std::string a;
    std::string b;
  };
  auto f = std::make_shared<Flags>();
  auto* cmd = app.add_subcommand("metrics", "MSE and PSNR between two cubes");
  cmd->add_option("--a", f->a, "First HCUB")->required();
  cmd->add_option("--b", f->b, "Second HCUB")->required();
  return [f, cmd] {
    if (!*cmd) return;
    const double m = mse(load_cube(f->a), load_cube(f->b));
    std::printf("mse=%.6g psnr=%.6g\n", m, psnr(m));
  };
}

// ------------------------------------------------------------------ render

std::size_t nearest_channel(std::span<const double> wavelengths, double target) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < wavelengths.size(); ++k) {
    if (std::abs(wavelengths[k] - target) < std::abs(wavelengths[best] - target)) best = k;
  }
  return best;
}

Action add_render(CLI::App& app) {
  struct Flags {
    std::string cube;
    std::string out;
    std::vector<double> rgb_nm{650.0, 549.0, 470.0};
    std::vector<std::size_t> channels;
    double wl_min = 400.0;
    double wl_max = 750.0;
    double gain = 1.0;
  };
  auto f = std::make_shared<Flags>();
  auto* cmd = app.add_subcommand("render", "RGB PNG composite of three cube channels");
  cmd->add_option("--cube", f->cube, "Input HCUB")->required();
  cmd->add_option("--out", f->out, "Output PNG")->required();
  auto* nm = cmd->add_option("--rgb-nm", f->rgb_nm, "Red,green,blue wavelengths; nearest channels are used")
                 ->delimiter(',')
                 ->expected(3)
                 ->capture_default_str();
  cmd->add_option("--channels", f->channels, "Explicit red,green,blue channel indices")
      ->delimiter(',')
      ->expected(3)
      ->excludes(nm);
  cmd->add_option("--wl-min", f->wl_min, "Wavelength of channel 0 in nm")->capture_default_str();
  cmd->add_option("--wl-max", f->wl_max, "Wavelength of the last channel in nm")->capture_default_str();
  cmd->add_option("--gain", f->gain, "Output byte = clamp(value * gain, 0, 255)")->capture_default_str();
  return [f, cmd] {
    if (!*cmd) return;
    if (!(f->gain > 0.0) || !std::isfinite(f->gain)) throw ValueError("--gain must be positive");
    const auto cube = load_cube(f->cube);
    const auto wavelengths = channel_wavelengths(f->wl_min, f->wl_max, cube.channels());
    std::array<std::size_t, 3> picked{};
    for (std::size_t c = 0; c < 3; ++c) {
      picked[c] = f->channels.empty() ? nearest_channel(wavelengths, f->rgb_nm[c]) : f->channels[c];
      if (picked[c] >= cube.channels()) {
        throw ValueError("channel " + std::to_string(picked[c]) + " out of range for " +
                         std::to_string(cube.channels()) + " channels");
      }
    }
    std::fprintf(stderr, "render: r=%zu (%.1f nm) g=%zu (%.1f nm) b=%zu (%.1f nm)\n", picked[0],
                 wavelengths[picked[0]], picked[1], wavelengths[picked[1]], picked[2], wavelengths[picked[2]]);
    std::vector<std::uint8_t> rgb(cube.height() * cube.width() * 3);
    for (std::size_t r = 0; r < cube.height(); ++r) {
      for (std::size_t c = 0; c < cube.width(); ++c) {
        for (std::size_t k = 0; k < 3; ++k) {
          const double v = std::clamp(std::round(cube(r, c, picked[k]) * f->gain), 0.0, 255.0);
          rgb[(r * cube.width() + c) * 3 + k] = static_cast<std::uint8_t>(v);
        }
      }
    }
    write_png_rgb(f->out, cube.width(), cube.height(), rgb);
  };
}

// ----------------------------------------------------- helpers for testing

Action add_synth_cube(CLI::App& app) {
  struct Flags {
    std::string out;
    std::size_t x = 100;
    std::size_t y = 100;
    std::size_t z = 25;
    std::string pattern = "white";
    float value = 1.0f;
    float max = 255.0f;
    std::uint64_t seed = 0;
  };
  auto f = std::make_shared<Flags>();
  auto* cmd = app.add_subcommand("synth-cube", "Write a constant or uniformly random HCUB");
  cmd->add_option("--out", f->out, "Output HCUB")->required();
  cmd->add_option("--x", f->x)->capture_default_str();
  cmd->add_option("--y", f->y)->capture_default_str();
  cmd->add_option("--z", f->z)->capture_default_str();
  cmd->add_option("--pattern", f->pattern)->check(CLI::IsMember({"white", "random"}))->capture_default_str();
  cmd->add_option("--value", f->value, "Voxel value for `white`")->capture_default_str();
  cmd->add_option("--max", f->max, "Upper bound for `random`")->capture_default_str();
  cmd->add_option("--seed", f->seed)->capture_default_str();
  return [f, cmd] {
    if (!*cmd) return;
    const CubeShape shape{f->y, f->x, f->z};
    if (f->pattern == "white") {
      save_cube(HyperCube::filled(shape, f->value), f->out);
      return;
    }
    std::mt19937_64 rng(f->seed);
    std::uniform_real_distribution<float> u(0.0f, f->max);
    std::vector<float> v(shape.voxels());
    for (float& x : v) x = u(rng);
    save_cube(HyperCube(shape, std::move(v)), f->out);
  };
}

Action add_perturb(CLI::App& app) {
  struct Flags {
    std::string cube;
    std::string out;
    double rel = 0.1;
    std::uint64_t seed = 0;
  };
  auto f = std::make_shared<Flags>();
  auto* cmd = app.add_subcommand("perturb", "Multiply every voxel by 1 + rel*N(0,1), clamped at 0");
  cmd->add_option("--cube", f->cube, "Input HCUB")->required();
  cmd->add_option("--out", f->out, "Output HCUB")->required();
  cmd->add_option("--rel", f->rel, "Relative noise level")->capture_default_str();
  cmd->add_option("--seed", f->seed)->capture_default_str();
  return [f, cmd] {
    if (!*cmd) return;
    if (!(f->rel >= 0.0) || !std::isfinite(f->rel)) throw ValueError("--rel must be non-negative");
    const auto cube = load_cube(f->cube);
    std::mt19937_64 rng(f->seed);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<float> v(cube.values().begin(), cube.values().end());
    for (float& x : v) x = static_cast<float>(std::max(0.0, x * (1.0 + f->rel * n(rng))));
    save_cube(HyperCube(cube.shape(), std::move(v)), f->out);
  };
}

Action add_export_mtx(CLI::App& app) {
  struct Flags {
    std::string out;
    std::size_t max_nnz = BuildOptions{}.max_nnz;
    GeometryFlags geom;
    OpticsFlags optics;
    std::size_t threads = 0;
  };
  auto f = std::make_shared<Flags>();
  auto* cmd = app.add_subcommand("export-mtx", "Write the system matrix H in Matrix Market format");
  cmd->add_option("--out", f->out, "Output .mtx")->required();
  cmd->add_option("--max-nnz", f->max_nnz)->capture_default_str();
  add_geometry_flags(*cmd, f->geom);
  add_optics_flags(*cmd, f->optics, false);
  add_threads_flag(*cmd, f->threads);
  return [f, cmd] {
    if (!*cmd) return;
    set_thread_count(f->threads);
    const auto geom = f->geom.resolve({100, 100, 25});
    const auto h = build_h(geom, f->optics.resolve(geom), BuildOptions{f->max_nnz});
    export_matrix_market(h, fs::path(f->out));
    std::printf("%s: %zux%zu nnz=%zu\n", f->out.c_str(), h.rows(), h.cols(), h.nnz());
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CTIS simulation, reconstruction and calibration toolkit", "ctis"};
  app.require_subcommand(1);
  const std::vector<Action> actions{
      add_simulate(app),  add_reconstruct(app), add_calibrate_psf(app), add_fit_blackbody(app),
      add_sensitivity(app), add_dataset(app),   add_tiles(app),         add_metrics(app),
      add_render(app),    add_synth_cube(app),  add_perturb(app),       add_export_mtx(app),
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    for (const auto& action : actions) action();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

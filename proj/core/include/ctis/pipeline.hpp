#pragma once

// Dataset preparation: spectral binning of pushbroom cubes, random crops,
// CTIS simulation, 3x3 tile splitting and train/val/test partitioning.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ctis/cube.hpp"
#include "ctis/simulator.hpp"

namespace ctis {

inline constexpr std::size_t kSourceChannels = 216;
inline constexpr std::size_t kTrimFront = 10;
inline constexpr std::size_t kTrimBack = 6;

/// 216 -> 25 (blocks of 8) or 216 -> 100 (blocks of 2) after dropping the
/// first 10 and last 6 channels.
HyperCube spectral_bin(const HyperCube& cube, std::size_t target_channels);

struct CropOrigin {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const CropOrigin&, const CropOrigin&) = default;
};

/// `count` uniformly drawn top-left corners of size x size windows fully inside
/// a height x width source. Deterministic for a given seed.
std::vector<CropOrigin> crop_origins(std::size_t height, std::size_t width, std::size_t count,
                                     std::size_t size, std::uint64_t seed);

struct Crop {
  CropOrigin origin;
  HyperCube cube;
};

std::vector<Crop> crop_samples(const HyperCube& cube, std::size_t count, std::size_t size,
                               std::uint64_t seed);
HyperCube crop(const HyperCube& cube, CropOrigin origin, std::size_t size);

using TileSet = std::array<CtisImage, 9>;

/// Row-major 3x3 partition; tile 4 holds the zeroth order.
TileSet split_tiles(const CtisImage& image);
/// As above, additionally checking that the image matches the geometry.
TileSet split_tiles(const CtisImage& image, const GeometryParams& geom);
CtisImage reassemble_tiles(const TileSet& tiles);

enum class Split { train, val, test, unseen };
std::string to_string(Split split);
Split parse_split(const std::string& text);

struct SplitFractions {
  double train = 0.7;
  double val = 0.15;
  double test = 0.15;
};

/// Largest-remainder apportionment of n samples; the three counts sum to n.
std::array<std::size_t, 3> split_counts(std::size_t n, const SplitFractions& fractions);

struct ManifestEntry {
  std::uint64_t id = 0;
  std::string source;
  std::size_t row = 0;
  std::size_t col = 0;
  Split split = Split::train;
  std::string cube_path;
  std::string image_path;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  /// Throws ValueError on duplicate ids.
  void validate() const;
  [[nodiscard]] std::size_t count(Split split) const;
};

/// Entries already labelled `unseen` keep that label and are not shuffled.
/// The rest are shuffled with `seed` and assigned contiguously to
/// train/val/test with split_counts(). Output is sorted by id.
DatasetManifest partition(std::vector<ManifestEntry> entries, const SplitFractions& fractions,
                          std::uint64_t seed);

/// CSV header: id,source,row,col,split,cube_path,image_path
std::string format_manifest_csv(const DatasetManifest& manifest);
void write_manifest_csv(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest read_manifest_csv(const std::filesystem::path& path);

struct DatasetConfig {
  std::size_t crops_per_source = 768;
  std::size_t crop_size = 100;
  std::size_t target_channels = 25;
  std::uint64_t crop_seed = 1;
  std::uint64_t noise_seed = 2;
  std::uint64_t partition_seed = 3;
  SplitFractions fractions;
  /// Source file stems whose samples are held out as `unseen`.
  std::set<std::string> unseen_sources;
  std::filesystem::path output_dir;
  /// When false only the manifest is produced (cubes and images are still
  /// computed but not persisted).
  bool write_files = true;
};

struct DatasetResult {
  DatasetManifest manifest;
  std::vector<std::string> errors;  // one line per failed source
};

/// bin -> crop -> simulate -> write HCUB/HIMG pairs -> manifest, per source.
/// Per-source failures are collected in `errors`; the batch continues.
/// Sample ids are source_index * crops_per_source + crop_index.
DatasetResult generate_dataset(std::span<const std::filesystem::path> sources,
                               const GeometryParams& geom, const OpticalParams& optics,
                               const DatasetConfig& config);

/// SplitMix64 mixing of a base seed with a stream index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace ctis

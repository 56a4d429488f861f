#include "ctis/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "ctis/error.hpp"
#include "ctis/parallel.hpp"

namespace ctis {
namespace {

std::string sample_name(std::uint64_t id, const char* extension) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%08llu.%s", static_cast<unsigned long long>(id), extension);
  return buf;
}

void check_csv_field(const std::string& field) {
  if (field.find_first_of(",\n\r") != std::string::npos) {
    throw ValueError("manifest field contains a separator: '" + field + "'");
  }
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::uint64_t parse_u64(const std::string& text, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw FormatError("manifest line " + std::to_string(line_no) + ": bad integer '" + text + "'");
  }
}

}  // namespace

HyperCube spectral_bin(const HyperCube& cube, std::size_t target_channels) {
  if (cube.channels() != kSourceChannels) {
    throw_dimension("spectral_bin: source channels", kSourceChannels, cube.channels());
  }
  const std::size_t kept = kSourceChannels - kTrimFront - kTrimBack;
  if (target_channels != 25 && target_channels != 100) {
    throw ValueError("spectral_bin: target must be 25 or 100 channels");
  }
  const std::size_t block = kept / target_channels;
  const CubeShape out_shape{cube.height(), cube.width(), target_channels};
  std::vector<float> out(out_shape.voxels());
  for (std::size_t r = 0; r < cube.height(); ++r) {
    for (std::size_t c = 0; c < cube.width(); ++c) {
      const auto spectrum = cube.spectrum(r, c);
      for (std::size_t k = 0; k < target_channels; ++k) {
        double acc = 0.0;
        const std::size_t first = kTrimFront + k * block;
        for (std::size_t i = first; i < first + block; ++i) acc += spectrum[i];
        out[out_shape.index(r, c, k)] = static_cast<float>(acc / static_cast<double>(block));
      }
    }
  }
  return HyperCube(out_shape, std::move(out));
}

std::vector<CropOrigin> crop_origins(std::size_t height, std::size_t width, std::size_t count,
                                     std::size_t size, std::uint64_t seed) {
  if (size == 0) throw ValueError("crop size must be >= 1");
  if (height < size || width < size) {
    throw DimensionError("crop: source " + std::to_string(height) + "x" + std::to_string(width) +
                         " is smaller than the " + std::to_string(size) + "-pixel crop");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> rows(0, height - size);
  std::uniform_int_distribution<std::size_t> cols(0, width - size);
  std::vector<CropOrigin> out(count);
  for (auto& o : out) {
    o.row = rows(rng);
    o.col = cols(rng);
  }
  return out;
}

HyperCube crop(const HyperCube& cube, CropOrigin origin, std::size_t size) {
  if (origin.row + size > cube.height() || origin.col + size > cube.width()) {
    throw DimensionError("crop window leaves the source cube");
  }
  const CubeShape shape{size, size, cube.channels()};
  std::vector<float> out;
  out.reserve(shape.voxels());
  for (std::size_t r = 0; r < size; ++r) {
    const auto first = cube.values().subspan(cube.shape().index(origin.row + r, origin.col, 0),
                                             size * cube.channels());
    out.insert(out.end(), first.begin(), first.end());
  }
  return HyperCube(shape, std::move(out));
}

std::vector<Crop> crop_samples(const HyperCube& cube, std::size_t count, std::size_t size,
                               std::uint64_t seed) {
  std::vector<Crop> out;
  out.reserve(count);
  for (const CropOrigin& o : crop_origins(cube.height(), cube.width(), count, size, seed)) {
    out.push_back({o, crop(cube, o, size)});
  }
  return out;
}

TileSet split_tiles(const CtisImage& image) {
  if (image.side() % 3 != 0) {
    throw ValueError("split_tiles: side " + std::to_string(image.side()) + " is not divisible by 3");
  }
  const std::size_t t = image.side() / 3;
  TileSet tiles;
  for (std::size_t ti = 0; ti < 3; ++ti) {
    for (std::size_t tj = 0; tj < 3; ++tj) {
      std::vector<float> values;
      values.reserve(t * t);
      for (std::size_t r = 0; r < t; ++r) {
        const auto row = image.values().subspan((ti * t + r) * image.side() + tj * t, t);
        values.insert(values.end(), row.begin(), row.end());
      }
      tiles[ti * 3 + tj] = CtisImage(t, std::move(values));
    }
  }
  return tiles;
}

TileSet split_tiles(const CtisImage& image, const GeometryParams& geom) {
  const std::size_t q = image_side(geom);
  if (image.side() != q) throw_dimension("split_tiles: image side for geometry", q, image.side());
  return split_tiles(image);
}

CtisImage reassemble_tiles(const TileSet& tiles) {
  const std::size_t t = tiles[0].side();
  for (const auto& tile : tiles) {
    if (tile.side() != t) throw DimensionError("reassemble_tiles: tiles differ in size");
  }
  const std::size_t q = 3 * t;
  std::vector<float> values(q * q);
  for (std::size_t ti = 0; ti < 3; ++ti) {
    for (std::size_t tj = 0; tj < 3; ++tj) {
      const auto& tile = tiles[ti * 3 + tj];
      for (std::size_t r = 0; r < t; ++r) {
        const auto src = tile.values().subspan(r * t, t);
        std::copy(src.begin(), src.end(), values.begin() + static_cast<std::ptrdiff_t>((ti * t + r) * q + tj * t));
      }
    }
  }
  return CtisImage(q, std::move(values));
}

std::string to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    case Split::unseen: return "unseen";
  }
  return "?";
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::train;
  if (text == "val") return Split::val;
  if (text == "test") return Split::test;
  if (text == "unseen") return Split::unseen;
  throw FormatError("unknown split '" + text + "'");
}

std::array<std::size_t, 3> split_counts(std::size_t n, const SplitFractions& fractions) {
  const std::array<double, 3> f{fractions.train, fractions.val, fractions.test};
  for (double v : f) {
    if (!(v >= 0.0)) throw ValueError("split fractions must be >= 0");
  }
  if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9) throw ValueError("split fractions must sum to 1");
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = f[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    remainder[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < n; i = (i + 1) % 3, ++assigned) ++counts[order[i]];
  return counts;
}

void DatasetManifest::validate() const {
  std::unordered_set<std::uint64_t> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.id).second) throw ValueError("manifest: duplicate sample id " + std::to_string(e.id));
  }
}

std::size_t DatasetManifest::count(Split split) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [&](const ManifestEntry& e) { return e.split == split; }));
}

DatasetManifest partition(std::vector<ManifestEntry> entries, const SplitFractions& fractions,
                          std::uint64_t seed) {
  if (entries.empty()) throw ValueError("partition: no entries");
  std::sort(entries.begin(), entries.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.id < b.id; });
  DatasetManifest manifest{std::move(entries)};
  manifest.validate();

  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    if (manifest.entries[i].split != Split::unseen) pool.push_back(i);
  }
  const auto counts = split_counts(pool.size(), fractions);
  std::mt19937_64 rng(seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  std::size_t next = 0;
  const std::array<Split, 3> labels{Split::train, Split::val, Split::test};
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t n = 0; n < counts[s]; ++n) manifest.entries[pool[next++]].split = labels[s];
  }
  return manifest;
}

std::string format_manifest_csv(const DatasetManifest& manifest) {
  std::string out = "id,source,row,col,split,cube_path,image_path\n";
  for (const auto& e : manifest.entries) {
    check_csv_field(e.source);
    check_csv_field(e.cube_path);
    check_csv_field(e.image_path);
    out += std::to_string(e.id) + ',' + e.source + ',' + std::to_string(e.row) + ',' +
           std::to_string(e.col) + ',' + to_string(e.split) + ',' + e.cube_path + ',' + e.image_path + '\n';
  }
  return out;
}

void write_manifest_csv(const DatasetManifest& manifest, const std::filesystem::path& path) {
  const std::string text = format_manifest_csv(manifest);
  write_file_atomic(path, text);
}

DatasetManifest read_manifest_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty manifest");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "id,source,row,col,split,cube_path,image_path") {
    throw FormatError(path.string() + ": unexpected manifest header");
  }
  DatasetManifest manifest;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_line(line);
    if (f.size() != 7) throw FormatError("manifest line " + std::to_string(line_no) + ": expected 7 fields");
    ManifestEntry e;
    e.id = parse_u64(f[0], line_no);
    e.source = f[1];
    e.row = parse_u64(f[2], line_no);
    e.col = parse_u64(f[3], line_no);
    e.split = parse_split(f[4]);
    e.cube_path = f[5];
    e.image_path = f[6];
    manifest.entries.push_back(std::move(e));
  }
  manifest.validate();
  return manifest;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

DatasetResult generate_dataset(std::span<const std::filesystem::path> sources,
                               const GeometryParams& geom, const OpticalParams& optics,
                               const DatasetConfig& config) {
  geom.validate();
  optics.validate(geom);
  const CubeShape want{config.crop_size, config.crop_size, config.target_channels};
  if (geom.cube_shape() != want) {
    throw DimensionError("generate_dataset: geometry does not match crop size / target channels");
  }
  if (config.crops_per_source == 0) throw ValueError("generate_dataset: crops_per_source must be >= 1");
  if (config.write_files) {
    if (config.output_dir.empty()) throw ValueError("generate_dataset: output directory required");
    std::filesystem::create_directories(config.output_dir / "cubes");
    std::filesystem::create_directories(config.output_dir / "images");
  }

  std::vector<std::vector<ManifestEntry>> per_source(sources.size());
  std::vector<std::string> per_source_error(sources.size());
  parallel_for(
      sources.size(),
      [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t i = begin; i < end; ++i) {
          const auto& path = sources[i];
          const std::string stem = path.stem().string();
          try {
            const HyperCube binned = spectral_bin(load_cube(path), config.target_channels);
            const auto origins = crop_origins(binned.height(), binned.width(), config.crops_per_source,
                                              config.crop_size, derive_seed(config.crop_seed, i));
            std::vector<ManifestEntry> rows;
            rows.reserve(origins.size());
            for (std::size_t j = 0; j < origins.size(); ++j) {
              const std::uint64_t id = i * config.crops_per_source + j;
              const HyperCube sample = crop(binned, origins[j], config.crop_size);
              const CtisImage image = simulate(sample, geom, optics, derive_seed(config.noise_seed, id));
              ManifestEntry e;
              e.id = id;
              e.source = stem;
              e.row = origins[j].row;
              e.col = origins[j].col;
              e.split = config.unseen_sources.contains(stem) ? Split::unseen : Split::train;
              e.cube_path = "cubes/" + sample_name(id, "hcub");
              e.image_path = "images/" + sample_name(id, "himg");
              if (config.write_files) {
                save_cube(sample, config.output_dir / e.cube_path);
                save_image(image, config.output_dir / e.image_path);
              }
              rows.push_back(std::move(e));
            }
            per_source[i] = std::move(rows);
          } catch (const std::exception& ex) {
            per_source[i].clear();
            per_source_error[i] = path.string() + ": " + ex.what();
          }
        }
      },
      1);

  DatasetResult result;
  std::vector<ManifestEntry> entries;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (!per_source_error[i].empty()) result.errors.push_back(per_source_error[i]);
    for (auto& e : per_source[i]) entries.push_back(std::move(e));
  }
  if (entries.empty()) {
    result.errors.push_back("no samples were generated");
    return result;
  }
  result.manifest = partition(std::move(entries), config.fractions, config.partition_seed);
  if (config.write_files) write_manifest_csv(result.manifest, config.output_dir / "manifest.csv");
  return result;
}

}  // namespace ctis

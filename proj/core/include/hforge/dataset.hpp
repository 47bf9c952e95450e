#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hforge/compose.hpp"
#include "hforge/mesh.hpp"
#include "hforge/placement.hpp"

namespace hforge {

inline constexpr const char* kToolVersion = "0.3.0";

struct BackgroundEntry {
  std::string id;  // file stem of the image
  std::filesystem::path image;
  std::filesystem::path mask;
  std::optional<double> horizon_row;
  std::optional<double> camera_height;
  std::optional<double> focal_px;
};

struct ModelEntry {
  std::filesystem::path mesh;
  std::filesystem::path skeleton;
  int identity_id = 0;
};

struct DatasetManifest {
  std::filesystem::path source;  // manifest file, empty when built in code
  std::vector<BackgroundEntry> backgrounds;
  std::vector<ModelEntry> models;
  /// Ground model inside is ignored; it is resolved per background.
  PlacementConfig placement;
  double horizon_fraction = 0.45;
  double camera_height = 1.5;
  double focal_fraction = 0.9;
  std::uint64_t seed = 0;
  int image_count = 0;
  double train_fraction = 0.8;
  double target_height = 1.0;
  UpAxis up_axis = UpAxis::PosY;
  /// Hash input for the reproducibility record.
  std::string canonical_text;

  /// Throws Error(Validation) listing every missing file and duplicate id.
  void validate() const;

  /// Per-background calibration: defaults from the image size plus overrides.
  GroundModel ground_for(const BackgroundEntry& bg, int width, int height) const;
};

/// Cityscapes label ids used when a manifest gives class names without its
/// own [labels] table.
int default_label_id(const std::string& name);

/// TOML manifest; relative paths resolve against the manifest's directory.
/// Throws Error(Io), Error(Parse) or Error(Validation).
DatasetManifest load_manifest(const std::filesystem::path& path);

struct BackgroundRejection {
  std::size_t index = 0;
  std::string id;
  std::string reason;
};

struct BackgroundFilter {
  std::vector<std::size_t> usable;
  std::vector<BackgroundRejection> rejected;
};

/// Drops backgrounds whose masks contain person pixels; unreadable entries
/// are rejected with their error rather than aborting.
BackgroundFilter filter_backgrounds(const DatasetManifest& manifest);

struct Split {
  std::vector<int> train;
  std::vector<int> test;
};

/// Seeded shuffle, |train| = round-half-up(fraction * n).
/// Throws Error(InvalidFraction) unless 0 < fraction < 1.
Split split_dataset(std::span<const int> ids, double train_fraction, std::uint64_t seed);

/// As above, then swaps images so every identity seen in test also appears in
/// train whenever that is possible without breaking coverage elsewhere.
/// `identities[i]` lists the identities visible in image `ids[i]`.
Split split_dataset(std::span<const int> ids, double train_fraction, std::uint64_t seed,
                    std::span<const std::vector<int>> identities);

struct CocoImage {
  std::string file_name;
  int width = 0;
  int height = 0;
  std::vector<AnnotationRecord> records;
};

/// COCO keypoints document with `identity_id` and optional `face_bbox`
/// extensions. Ids are dense from 1 in input order; output bytes are stable.
/// Throws Error(InvariantViolation) for inconsistent records.
std::string coco_json(std::span<const CocoImage> images);
void write_coco(std::span<const CocoImage> images, const std::filesystem::path& path);

struct GenerateOptions {
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::optional<int> image_count;
  /// Fraction of failed images tolerated before the run is reported failed.
  double failure_budget = 0.10;
};

struct GenerateReport {
  int requested = 0;
  int written = 0;
  int failed = 0;
  std::vector<BackgroundRejection> rejected_backgrounds;
  bool over_budget = false;
};

/// Composes and annotates the requested images, writes
/// images/, annotations/{train,test}.json and run.json under out_dir.
GenerateReport generate(const DatasetManifest& manifest, const GenerateOptions& options);

struct PreviewOptions {
  std::filesystem::path out_dir;
  int count = 5;
  std::optional<std::uint64_t> seed;
};

/// Writes keypoint overlay and ownership PNGs for the first `count` images a
/// `generate` run would produce.
int preview(const DatasetManifest& manifest, const PreviewOptions& options);

}  // namespace hforge

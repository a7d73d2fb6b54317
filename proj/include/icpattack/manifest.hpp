#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "icpattack/localization_pair.hpp"

namespace icpattack {

struct ManifestEntry {
  std::string id;
  std::filesystem::path scan;  ///< relative to the manifest's directory
  std::filesystem::path map;
  Pose3d t_qp;
  std::optional<Eigen::Vector2d> location;
};

struct DatasetManifest {
  std::string units = "normalized";  ///< "m" | "normalized"
  std::string profile = "shapenet";
  std::vector<ManifestEntry> entries;
};

/// Problem with one manifest entry; collection continues past these.
struct ManifestEntryError {
  std::string id;
  std::string message;
};

/// Parses a manifest. With `errors` given, entries that fail validation
/// (missing keys, malformed or non-rigid pose) are skipped and recorded;
/// without it the first bad entry throws.
DatasetManifest read_manifest(const std::filesystem::path& path,
                              std::vector<ManifestEntryError>* errors = nullptr);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Loads one entry's clouds, validates them, and caches map normals on
/// the pair. `base_dir` anchors relative paths.
LocalizationPair load_entry(const ManifestEntry& entry, const std::filesystem::path& base_dir);

/// Loads every loadable entry; per-entry failures are collected into
/// `errors` instead of aborting the batch. Maps shared between entries
/// are loaded (and given normals) once.
std::vector<LocalizationPair> load_manifest(const std::filesystem::path& path,
                                            std::vector<ManifestEntryError>* errors = nullptr);

/// Writes pairs as binary PLY clouds plus manifest.json and one
/// pair_<id>.json entry file per pair (the `--pair` input format).
void save_dataset(const std::filesystem::path& dir, const std::vector<LocalizationPair>& pairs,
                  const std::string& profile, const std::string& units);

/// Reads a single-entry JSON file (same schema as manifest entries).
LocalizationPair load_pair_file(const std::filesystem::path& path);

}  // namespace icpattack

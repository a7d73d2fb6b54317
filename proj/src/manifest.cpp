#include "icpattack/manifest.hpp"

#include <fstream>
#include <map>

#include "icpattack/cloud_io.hpp"
#include "icpattack/errors.hpp"
#include "icpattack/serialization.hpp"

namespace icpattack {

namespace {

Json entry_to_json(const ManifestEntry& entry) {
  Json j;
  j["id"] = entry.id;
  j["scan"] = entry.scan.generic_string();
  j["map"] = entry.map.generic_string();
  j["T_qp"] = pose_to_json(entry.t_qp);
  if (entry.location)
    j["location"] = Json::array({entry.location->x(), entry.location->y()});
  return j;
}

ManifestEntry entry_from_json(const Json& j) {
  ManifestEntry entry;
  if (!j.is_object()) throw ValidationError("manifest entry: expected an object");
  entry.id = j.at("id").get<std::string>();
  entry.scan = std::filesystem::path(j.at("scan").get<std::string>());
  entry.map = std::filesystem::path(j.at("map").get<std::string>());
  entry.t_qp = pose_from_json(j.at("T_qp"));
  if (j.contains("location") && !j["location"].is_null()) {
    const auto& loc = j["location"];
    if (!loc.is_array() || loc.size() != 2)
      throw ValidationError("manifest entry: location must be [x, y]");
    entry.location = Eigen::Vector2d(loc[0].get<double>(), loc[1].get<double>());
  }
  return entry;
}

Json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return j;
}

}  // namespace

DatasetManifest read_manifest(const std::filesystem::path& path,
                              std::vector<ManifestEntryError>* errors) {
  const Json j = parse_file(path);
  if (!j.is_object()) throw ValidationError(path.string() + ": manifest must be an object");
  DatasetManifest manifest;
  manifest.units = j.value("units", std::string("normalized"));
  manifest.profile = j.value("profile", std::string("shapenet"));
  if (!j.contains("entries") || !j["entries"].is_array())
    throw ValidationError(path.string() + ": missing entries array");
  std::size_t index = 0;
  for (const auto& e : j["entries"]) {
    try {
      manifest.entries.push_back(entry_from_json(e));
    } catch (const std::exception& err) {
      const std::string id = e.is_object() && e.contains("id") && e["id"].is_string()
                                 ? e["id"].get<std::string>()
                                 : "entry-" + std::to_string(index);
      if (!errors)
        throw ValidationError(path.string() + ": " + id + ": " + err.what());
      errors->push_back({id, err.what()});
    }
    ++index;
  }
  return manifest;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  Json j;
  j["units"] = manifest.units;
  j["profile"] = manifest.profile;
  Json entries = Json::array();
  for (const auto& e : manifest.entries) entries.push_back(entry_to_json(e));
  j["entries"] = std::move(entries);
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

LocalizationPair load_entry(const ManifestEntry& entry, const std::filesystem::path& base_dir) {
  LocalizationPair pair;
  pair.id = entry.id;
  pair.scan = read_cloud(base_dir / entry.scan);
  PointCloud map = read_cloud(base_dir / entry.map);
  pair.map = map.has_normals() ? std::move(map) : estimate_normals(map);
  pair.ground_truth = entry.t_qp;
  pair.location = entry.location;
  return pair;
}

std::vector<LocalizationPair> load_manifest(const std::filesystem::path& path,
                                            std::vector<ManifestEntryError>* errors) {
  if (errors) errors->clear();
  const DatasetManifest manifest = read_manifest(path, errors);
  const std::filesystem::path base_dir = path.parent_path();

  // Maps referenced by several entries are loaded and equipped once.
  std::map<std::string, PointCloud> map_cache;
  std::vector<LocalizationPair> pairs;
  for (const auto& entry : manifest.entries) {
    try {
      LocalizationPair pair;
      pair.id = entry.id;
      pair.scan = read_cloud(base_dir / entry.scan);
      const std::string key = (base_dir / entry.map).lexically_normal().generic_string();
      auto it = map_cache.find(key);
      if (it == map_cache.end()) {
        PointCloud map = read_cloud(base_dir / entry.map);
        it = map_cache.emplace(key, map.has_normals() ? std::move(map) : estimate_normals(map))
                 .first;
      }
      pair.map = it->second;
      pair.ground_truth = entry.t_qp;
      pair.location = entry.location;
      pairs.push_back(std::move(pair));
    } catch (const ValidationError& e) {
      if (!errors) throw;
      errors->push_back({entry.id, e.what()});
    }
  }
  return pairs;
}

void save_dataset(const std::filesystem::path& dir, const std::vector<LocalizationPair>& pairs,
                  const std::string& profile, const std::string& units) {
  std::filesystem::create_directories(dir);
  DatasetManifest manifest;
  manifest.units = units;
  manifest.profile = profile;
  for (const auto& pair : pairs) {
    ManifestEntry entry;
    entry.id = pair.id;
    entry.scan = "scan_" + pair.id + ".ply";
    entry.map = "map_" + pair.id + ".ply";
    entry.t_qp = pair.ground_truth;
    entry.location = pair.location;
    write_ply(dir / entry.scan, pair.scan);
    write_ply(dir / entry.map, pair.map);
    std::ofstream out(dir / ("pair_" + pair.id + ".json"));
    if (!out) throw ValidationError("cannot write pair file for " + pair.id);
    out << entry_to_json(entry).dump(2) << "\n";
    manifest.entries.push_back(std::move(entry));
  }
  write_manifest(dir / "manifest.json", manifest);
}

LocalizationPair load_pair_file(const std::filesystem::path& path) {
  const ManifestEntry entry = entry_from_json(parse_file(path));
  return load_entry(entry, path.parent_path());
}

}  // namespace icpattack

#pragma once

// "ffo-v1" dataset: a JSON manifest plus a sidecar blob of FFO Bloch vectors
// as little-endian float64 in (sample, t, k..., component) order.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpl/floquet.hpp"

namespace fpl {

inline constexpr const char* kDatasetVersion = "ffo-v1";
inline constexpr const char* kEngineVersion = "fpl 1.0.0";

struct SampleMeta {
  std::int64_t id = 0;
  std::vector<double> params;
  bool excluded = false;
  double gap0 = 0.0;
  double gap_pi = 0.0;
  nlohmann::json invariants;  // null until annotated
};

struct Dataset {
  std::string model_tag;
  std::vector<std::string> param_names;
  nlohmann::json fixed = nlohmann::json::object();
  GridSpec grid;
  nlohmann::json tolerances = nlohmann::json::object();
  std::string config_hash;
  std::string timestamp;
  std::vector<SampleMeta> samples;
  std::vector<FfoField> fields;  // one per sample, same order
};

/// 64-bit FNV-1a, used for config and manifest fingerprints.
std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

nlohmann::json manifest_json(const Dataset& d, const std::string& blob_name, const std::string& blob_hash);

/// Hash of the manifest with the timestamp field removed.
std::string manifest_hash(const nlohmann::json& manifest);

/// Writes manifest.json and ffo.bin into dir. Returns the manifest hash.
std::string write_dataset(const Dataset& d, const std::filesystem::path& dir);

/// Throws VersionMismatch or IoError.
Dataset read_dataset(const std::filesystem::path& dir);

/// Rewrites only the manifest (e.g. after annotating invariants).
void write_manifest(const Dataset& d, const std::filesystem::path& dir);

}  // namespace fpl

#include "fpl/dataset.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fpl/error.hpp"

namespace fpl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kBlob = "ffo.bin";

void put_le(std::string& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

double get_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return std::bit_cast<double>(bits);
}

std::string blob_bytes(const Dataset& d) {
  std::string out;
  std::size_t total = 0;
  for (const auto& f : d.fields) total += f.size() * 3 * 8;
  out.reserve(total);
  for (const auto& f : d.fields) {
    for (std::size_t i = 0; i < f.size(); ++i) {
      put_le(out, f.nx[i]);
      put_le(out, f.ny[i]);
      put_le(out, f.nz[i]);
    }
  }
  return out;
}

json grid_json(const GridSpec& g) {
  return {{"nk", g.nk}, {"nt", g.nt}, {"dims", g.dims}, {"substeps", g.substeps}};
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error(ErrorKind::IoError, "cannot write " + p.string());
  os << s;
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

json manifest_json(const Dataset& d, const std::string& blob_name, const std::string& blob_hash) {
  json samples = json::array();
  for (const auto& s : d.samples) {
    json j = {{"id", s.id}, {"params", s.params}, {"excluded", s.excluded}, {"gap0", s.gap0},
              {"gap_pi", s.gap_pi}};
    if (!s.invariants.is_null()) j["invariants"] = s.invariants;
    samples.push_back(std::move(j));
  }
  json excluded = json::array();
  for (const auto& s : d.samples) {
    if (s.excluded) excluded.push_back(s.id);
  }
  return {{"version", kDatasetVersion},
          {"engine_version", kEngineVersion},
          {"model", d.model_tag},
          {"param_names", d.param_names},
          {"fixed", d.fixed},
          {"grid", grid_json(d.grid)},
          {"tolerances", d.tolerances},
          {"config_hash", d.config_hash},
          {"timestamp", d.timestamp},
          {"blob", blob_name},
          {"blob_hash", blob_hash},
          {"excluded", excluded},
          {"samples", samples}};
}

std::string manifest_hash(const json& manifest) {
  json m = manifest;
  m.erase("timestamp");
  const std::string s = m.dump();
  return hex64(fnv1a64(s.data(), s.size()));
}

std::string write_dataset(const Dataset& d, const fs::path& dir) {
  fs::create_directories(dir);
  const std::string blob = blob_bytes(d);
  {
    std::ofstream os(dir / kBlob, std::ios::binary);
    if (!os) throw Error(ErrorKind::IoError, "cannot write " + (dir / kBlob).string());
    os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  }
  const json m = manifest_json(d, kBlob, hex64(fnv1a64(blob.data(), blob.size())));
  write_text(dir / kManifest, m.dump(2) + "\n");
  return manifest_hash(m);
}

void write_manifest(const Dataset& d, const fs::path& dir) {
  std::ifstream is(dir / kManifest);
  if (!is) throw Error(ErrorKind::IoError, "cannot read " + (dir / kManifest).string());
  const json old = json::parse(is);
  const json m = manifest_json(d, old.value("blob", kBlob), old.value("blob_hash", ""));
  write_text(dir / kManifest, m.dump(2) + "\n");
}

Dataset read_dataset(const fs::path& dir) {
  std::ifstream is(dir / kManifest);
  if (!is) throw Error(ErrorKind::IoError, "cannot read " + (dir / kManifest).string());
  json m;
  try {
    m = json::parse(is);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::IoError, std::string("malformed manifest: ") + e.what());
  }
  const std::string ver = m.value("version", "");
  if (ver != kDatasetVersion) {
    throw Error(ErrorKind::VersionMismatch, "expected " + std::string(kDatasetVersion) + ", found '" + ver + "'");
  }
  Dataset d;
  try {
    d.model_tag = m.at("model").get<std::string>();
    d.param_names = m.at("param_names").get<std::vector<std::string>>();
    d.fixed = m.at("fixed");
    const json& g = m.at("grid");
    d.grid = GridSpec{g.at("nk"), g.at("nt"), g.at("dims"), g.at("substeps")};
    d.tolerances = m.at("tolerances");
    d.config_hash = m.at("config_hash").get<std::string>();
    d.timestamp = m.value("timestamp", "");
    for (const json& s : m.at("samples")) {
      SampleMeta meta;
      meta.id = s.at("id");
      meta.params = s.at("params").get<std::vector<double>>();
      meta.excluded = s.at("excluded");
      meta.gap0 = s.at("gap0");
      meta.gap_pi = s.at("gap_pi");
      if (s.contains("invariants")) meta.invariants = s["invariants"];
      d.samples.push_back(std::move(meta));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::IoError, std::string("manifest field error: ") + e.what());
  }

  const fs::path blob_path = dir / m.value("blob", kBlob);
  std::ifstream bs(blob_path, std::ios::binary);
  if (!bs) throw Error(ErrorKind::IoError, "cannot read " + blob_path.string());
  std::string blob((std::istreambuf_iterator<char>(bs)), std::istreambuf_iterator<char>());
  const std::size_t per = static_cast<std::size_t>(d.grid.nt) * d.grid.k_points();
  if (blob.size() != d.samples.size() * per * 3 * 8) {
    throw Error(ErrorKind::IoError, "blob size does not match manifest");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(blob.data());
  for (const auto& s : d.samples) {
    FfoField f;
    f.grid = d.grid;
    f.sample_id = s.id;
    f.params = s.params;
    f.nx.resize(per);
    f.ny.resize(per);
    f.nz.resize(per);
    for (std::size_t i = 0; i < per; ++i, p += 24) {
      f.nx[i] = get_le(p);
      f.ny[i] = get_le(p + 8);
      f.nz[i] = get_le(p + 16);
    }
    d.fields.push_back(std::move(f));
  }
  return d;
}

}  // namespace fpl

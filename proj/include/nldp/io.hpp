#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "nldp/grid_function.hpp"

namespace nldp {

using json = nlohmann::json;

// %.17g; non-finite values become the strings "inf", "-inf", "nan".
std::string format_double(double v);
// Deterministic text: sorted keys, every float in format_double.
std::string dump_json(const json& j, int indent = 2);
json finite_or_string(double v);

std::uint64_t fnv1a(const std::string& s);
std::string fnv1a_hex(const std::string& s);

// Writes to a sibling temporary and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

struct ArtifactMeta {
  std::string config_hash;
  std::string version = NLDP_VERSION;
  std::string subcommand;
  std::uint64_t seed = 0;

  json to_json() const;
  std::string csv_comment() const;
};

void write_json(const std::filesystem::path& path, json j, const ArtifactMeta& meta);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::string str(const ArtifactMeta& meta) const;
  void write(const std::filesystem::path& path, const ArtifactMeta& meta) const;
};

// base.csv holds node coordinates and values, base.json the box, h, interpolation and the
// exterior spec it was built from.
void write_grid_function(const std::filesystem::path& base, const GridFunction& u, const json& exterior_spec,
                         const ArtifactMeta& meta);
GridFunction read_grid_function(const std::filesystem::path& base);

}  // namespace nldp

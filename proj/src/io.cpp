#include "nldp/io.hpp"

#include <fmt/format.h>
#include <unistd.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "nldp/config.hpp"

namespace nldp {

namespace fs = std::filesystem;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

namespace {

void dump(const json& j, int indent, int depth, std::string& out) {
  auto pad = [&](int d) {
    if (indent > 0) {
      out += '\n';
      out.append(static_cast<std::size_t>(indent * d), ' ');
    }
  };
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        pad(depth + 1);
        out += json(it.key()).dump();
        out += indent > 0 ? ": " : ":";
        dump(it.value(), indent, depth + 1, out);
      }
      pad(depth);
      out += '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      for (std::size_t k = 0; k < j.size(); ++k) {
        if (k) out += ',';
        pad(depth + 1);
        dump(j[k], indent, depth + 1, out);
      }
      pad(depth);
      out += ']';
      return;
    }
    case json::value_t::number_float: {
      double v = j.get<double>();
      out += std::isfinite(v) ? format_double(v) : "\"" + format_double(v) + "\"";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump_json(const json& j, int indent) {
  std::string out;
  dump(j, indent, 0, out);
  out += '\n';
  return out;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string fnv1a_hex(const std::string& s) { return fmt::format("{:016x}", fnv1a(s)); }

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += fmt::format(".tmp.{}", static_cast<long>(::getpid()));
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("cannot write " + tmp.string());
    os << content;
    os.flush();
    if (!os) throw ConfigError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

json ArtifactMeta::to_json() const {
  return {{"config_hash", config_hash}, {"version", version}, {"subcommand", subcommand}, {"seed", seed}};
}

std::string ArtifactMeta::csv_comment() const {
  return fmt::format("# nldp {} {} config {} seed {}\n", version, subcommand, config_hash, seed);
}

void write_json(const fs::path& path, json j, const ArtifactMeta& meta) {
  j["meta"] = meta.to_json();
  write_atomic(path, dump_json(j));
}

std::string CsvTable::str(const ArtifactMeta& meta) const {
  std::string out = meta.csv_comment();
  for (std::size_t k = 0; k < header.size(); ++k) out += (k ? "," : "") + header[k];
  out += '\n';
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (k) out += ',';
      out += format_double(r[k]);
    }
    out += '\n';
  }
  return out;
}

void CsvTable::write(const fs::path& path, const ArtifactMeta& meta) const { write_atomic(path, str(meta)); }

void write_grid_function(const fs::path& base, const GridFunction& u, const json& exterior_spec,
                         const ArtifactMeta& meta) {
  CsvTable t;
  t.header = u.dim() == 1 ? std::vector<std::string>{"x", "u"} : std::vector<std::string>{"x", "y", "u"};
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    Point z = u.node(k);
    std::vector<double> row(z.data(), z.data() + z.size());
    row.push_back(u.values()(k));
    t.rows.push_back(std::move(row));
  }
  fs::path csv = base, side = base;
  csv += ".csv";
  side += ".json";
  t.write(csv, meta);
  json j = {{"n", u.dim()},
            {"N", u.nodes_per_axis()},
            {"h", u.h()},
            {"lo", std::vector<double>(u.lo().data(), u.lo().data() + u.dim())},
            {"interp", u.interp() == Interp::cubic ? "cubic" : "linear"},
            {"exterior_tag", u.exterior().tag},
            {"exterior", exterior_spec},
            {"values", csv.filename().string()}};
  write_json(side, j, meta);
}

GridFunction read_grid_function(const fs::path& base) {
  fs::path csv = base, side = base;
  csv += ".csv";
  side += ".json";
  json j;
  try {
    j = json::parse(read_text(side));
  } catch (const json::exception& e) {
    throw ConfigError(side.string() + ": " + e.what());
  }
  const int n = j.at("n").get<int>(), N = j.at("N").get<int>();
  auto lo_v = j.at("lo").get<std::vector<double>>();
  Point lo(n);
  for (int d = 0; d < n; ++d) lo(d) = lo_v.at(d);
  Eigen::VectorXd vals(static_cast<Eigen::Index>(std::pow(N, n)));
  std::istringstream is(read_text(csv));
  std::string line;
  Eigen::Index k = 0;
  bool header = true;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    auto comma = line.rfind(',');
    if (k >= vals.size()) throw ConfigError(csv.string() + ": too many rows");
    vals(k++) = std::stod(line.substr(comma + 1));
  }
  if (k != vals.size()) throw ConfigError(csv.string() + ": expected " + std::to_string(vals.size()) + " rows");
  Interp in = j.at("interp").get<std::string>() == "linear" ? Interp::linear : Interp::cubic;
  return GridFunction(n, lo, j.at("h").get<double>(), N, vals, exterior_from_json(j.at("exterior"), n), in);
}

}  // namespace nldp

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nldp/constants.hpp"
#include "nldp/io.hpp"
#include "nldp/operator.hpp"
#include "nldp/params.hpp"
#include "nldp/solver.hpp"

namespace nldp {

inline constexpr const char* kConfigSchema = "nldp.config/1";

struct ExperimentConfig {
  json raw;  // after overrides and seed
  std::string hash;
  std::uint64_t seed = 20240917;
  std::filesystem::path base_dir;

  ProblemParams problem;
  QuadratureSpec quadrature;
  SolveConfig solve;
  json exterior_spec;

  double epsilon = 0.0;
  SelectionOptions selection;

  Point center;
  int levels = 5;
  double gamma = 0.0;
  int i_min = 1, i_max = 5;

  std::string eval_u = "beta";
  std::filesystem::path eval_file;
  std::vector<Point> eval_points;

  std::vector<std::pair<double, double>> scaling_pairs{{2.0, 0.5}, {0.5, 2.0}, {1.0, 1.0}};
  int scaling_probes = 8;
  std::string scaling_u = "beta";

  std::uint64_t fuzz_draws = 1000000;
  std::uint64_t c2_draws = 10000;

  std::filesystem::path output_dir = "out";
};

// Dotted-path assignment; the value is parsed as JSON when it parses, else taken as a string.
void apply_override(json& j, const std::string& key_value);

ExperimentConfig parse_config(json j, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {},
                             std::optional<std::uint64_t> seed = std::nullopt);

ProblemParams problem_from_json(const json& j, const std::filesystem::path& base_dir = ".");
Exterior exterior_from_json(const json& j, int n);

}  // namespace nldp

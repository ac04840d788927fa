#include "nldp/config.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace nldp {

namespace fs = std::filesystem;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <class T>
T get(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

double num(const json& j, const char* key, double fallback, const std::string& where) {
  double v = get<double>(j, key, fallback, where);
  if (!std::isfinite(v)) throw ConfigError(where + "." + key + " must be finite");
  return v;
}

double required(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
  return num(j, key, 0.0, where);
}

Point to_point(const json& j, int n, const std::string& where) {
  std::vector<double> v;
  try {
    v = j.get<std::vector<double>>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": expected an array of numbers");
  }
  if (static_cast<int>(v.size()) != n) throw ConfigError(where + ": expected " + std::to_string(n) + " coordinates");
  Point p(n);
  for (int d = 0; d < n; ++d) p(d) = v[d];
  return p;
}

// Two numeric columns; '#' lines and a non-numeric first line are skipped.
std::pair<std::vector<double>, std::vector<double>> read_table(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("referenced file does not exist: " + path.string());
  std::istringstream is(read_text(path));
  std::vector<double> a, b;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError(path.string() + ": expected two columns");
    try {
      double x = std::stod(line.substr(0, comma)), y = std::stod(line.substr(comma + 1));
      a.push_back(x);
      b.push_back(y);
    } catch (const std::exception&) {
      if (a.empty()) continue;
      throw ConfigError(path.string() + ": bad row '" + line + "'");
    }
  }
  return {a, b};
}

std::pair<std::vector<double>, std::vector<double>> table_columns(const json& j, const char* xkey,
                                                                  const fs::path& base, const std::string& where) {
  if (j.contains("file")) return read_table(base / j.at("file").get<std::string>());
  if (!j.contains(xkey) || !j.contains("values")) throw ConfigError(where + ": needs '" + xkey + "' and 'values' or 'file'");
  return {j.at(xkey).get<std::vector<double>>(), j.at("values").get<std::vector<double>>()};
}

SourceTerm source_from_json(const json& j) {
  const std::string w = "problem.source";
  std::string type = get<std::string>(j, "type", "zero", w);
  if (type == "zero") {
    check_keys(j, {"type"}, w);
    return SourceTerm::zero();
  }
  if (type == "constant") {
    check_keys(j, {"type", "value"}, w);
    return SourceTerm::constant(required(j, "value", w));
  }
  if (type == "cosine") {
    check_keys(j, {"type", "amplitude", "frequency"}, w);
    return SourceTerm::cosine(required(j, "amplitude", w), required(j, "frequency", w));
  }
  if (type == "step") {
    check_keys(j, {"type", "left", "right"}, w);
    return SourceTerm::step(required(j, "left", w), required(j, "right", w));
  }
  throw ConfigError(w + ": unknown type '" + type + "'");
}

CoefficientField coefficient_from_json(const json& j, int n, const fs::path& base) {
  const std::string w = "problem.coefficient";
  std::string type = get<std::string>(j, "type", "zero", w);
  if (type == "zero") {
    check_keys(j, {"type"}, w);
    return CoefficientField::zero();
  }
  if (type == "constant") {
    check_keys(j, {"type", "value"}, w);
    return CoefficientField::constant(required(j, "value", w));
  }
  if (type == "indicator-of-halfspace") {
    check_keys(j, {"type", "normal", "offset", "value"}, w);
    Point nrm = j.contains("normal") ? to_point(j.at("normal"), n, w + ".normal") : Point(Point::Unit(n, 0));
    return CoefficientField::halfspace(nrm, num(j, "offset", 0.0, w), num(j, "value", 1.0, w));
  }
  if (type == "checkerboard") {
    check_keys(j, {"type", "cell", "low", "high"}, w);
    return CoefficientField::checkerboard(n, required(j, "cell", w), num(j, "low", 0.0, w), required(j, "high", w));
  }
  if (type == "custom-table") {
    check_keys(j, {"type", "xs", "values", "file"}, w);
    auto [xs, vs] = table_columns(j, "xs", base, w);
    return CoefficientField::table(xs, vs);
  }
  if (type == "holder") {
    check_keys(j, {"type", "alpha", "M"}, w);
    return CoefficientField::holder(required(j, "alpha", w), required(j, "M", w));
  }
  throw ConfigError(w + ": unknown type '" + type + "'");
}

KernelField kernel_from_json(const json& j, int n, KernelOrder order, const fs::path& base) {
  const std::string w = "problem.kernel";
  std::string type = get<std::string>(j, "type", "gagliardo", w);
  if (type == "gagliardo") {
    check_keys(j, {"type"}, w);
    return gagliardo_kernel(n, order);
  }
  if (type == "scaled") {
    check_keys(j, {"type", "Lambda", "period"}, w);
    return scaled_kernel(n, order, required(j, "Lambda", w), num(j, "period", 1.0, w));
  }
  if (type == "custom-table") {
    check_keys(j, {"type", "Lambda", "radii", "values", "file"}, w);
    auto [r, v] = table_columns(j, "radii", base, w);
    return table_kernel(n, order, required(j, "Lambda", w), r, v);
  }
  throw ConfigError(w + ": unknown type '" + type + "'");
}

}  // namespace

Exterior exterior_from_json(const json& j, int n) {
  (void)n;
  const std::string w = "solve.exterior";
  std::string type = get<std::string>(j, "type", "constant", w);
  if (type == "constant") {
    check_keys(j, {"type", "value"}, w);
    return Exterior::constant(num(j, "value", 0.0, w));
  }
  if (type == "envelope") {
    check_keys(j, {"type", "eta", "cap"}, w);
    double cap = j.contains("cap") ? num(j, "cap", 0.0, w) : std::numeric_limits<double>::infinity();
    return Exterior::envelope(required(j, "eta", w), cap);
  }
  if (type == "step") {
    check_keys(j, {"type", "left", "right"}, w);
    return Exterior::step(required(j, "left", w), required(j, "right", w));
  }
  if (type == "linear") {
    check_keys(j, {"type", "slope"}, w);
    return Exterior::linear(required(j, "slope", w));
  }
  if (type == "tanh") {
    check_keys(j, {"type", "amplitude", "rate", "offset"}, w);
    double A = required(j, "amplitude", w), k = num(j, "rate", 1.0, w), c = num(j, "offset", 0.0, w);
    std::ostringstream tag;
    tag.precision(17);
    tag << "tanh:" << A << "," << k << "," << c;
    return Exterior::function([A, k, c](const Point& x) { return A * std::tanh(k * x(0)) + c; }, 0.0,
                              c + std::abs(A), c - std::abs(A), tag.str());
  }
  throw ConfigError(w + ": unknown type '" + type + "'");
}

ProblemParams problem_from_json(const json& j, const fs::path& base) {
  const std::string w = "problem";
  check_keys(j, {"n", "s", "t", "p", "q", "kernel", "coefficient", "c_hat", "source", "homogeneous"}, w);
  Exponents e;
  e.n = get<int>(j, "n", 1, w);
  if (e.n != 1 && e.n != 2) throw ConfigError("problem.n must be 1 or 2");
  e.s = required(j, "s", w);
  e.t = required(j, "t", w);
  e.p = required(j, "p", w);
  e.q = required(j, "q", w);
  auto a = coefficient_from_json(j.value("coefficient", json::object()), e.n, base);
  auto f = source_from_json(j.value("source", json::object()));
  auto P = ProblemParams::model(e, std::move(a), num(j, "c_hat", 1.0, w), std::move(f));
  json k = j.value("kernel", json::object());
  P.Ksp = kernel_from_json(k, e.n, {e.s, e.p}, base);
  P.Ktq = kernel_from_json(k, e.n, {e.t, e.q}, base);
  P.homogeneous = get<bool>(j, "homogeneous", false, w);
  return P;
}

void apply_override(json& j, const std::string& kv) {
  auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + kv + "'");
  std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
  json v;
  try {
    v = json::parse(val);
  } catch (const json::exception&) {
    v = val;
  }
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    auto dot = key.find('.', start);
    std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("--set: empty path component in '" + key + "'");
    if (!node->is_object()) throw ConfigError("--set: '" + key + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = v;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

ExperimentConfig parse_config(json j, const fs::path& base_dir) {
  check_keys(j, {"schema", "seed", "problem", "quadrature", "solve", "constants", "reglab", "eval", "scaling",
                 "inequalities", "output_dir", "description"},
             "config");
  if (!j.contains("schema")) throw ConfigError("config: missing schema version tag");
  if (j.at("schema") != kConfigSchema)
    throw ConfigError("config: unsupported schema " + j.at("schema").dump() + ", expected " + kConfigSchema);
  if (!j.contains("problem")) throw ConfigError("config: missing 'problem'");

  ExperimentConfig c;
  c.base_dir = base_dir;
  c.seed = get<std::uint64_t>(j, "seed", c.seed, "config");
  c.problem = problem_from_json(j.at("problem"), base_dir);
  const int n = c.problem.exponents.n;

  json q = j.value("quadrature", json::object());
  check_keys(q, {"rho_near", "R_far", "tol", "ts_level", "enforce_margin"}, "quadrature");
  c.quadrature.rho_near = num(q, "rho_near", 0.0, "quadrature");
  c.quadrature.R_far = num(q, "R_far", 0.0, "quadrature");
  c.quadrature.tol = num(q, "tol", c.quadrature.tol, "quadrature");
  c.quadrature.ts_level = get<int>(q, "ts_level", c.quadrature.ts_level, "quadrature");
  c.quadrature.enforce_margin = get<bool>(q, "enforce_margin", true, "quadrature");
  if (!(c.quadrature.tol > 0)) throw ConfigError("quadrature.tol must be positive");

  json s = j.value("solve", json::object());
  const std::string ws = "solve";
  check_keys(s, {"R", "N", "exterior", "interp", "tau0", "residual_tol", "max_iters", "continuation", "precond", "warm_start"}, ws);
  c.solve.R = num(s, "R", 2.0, ws);
  c.solve.N = get<int>(s, "N", 257, ws);
  if (!(c.solve.R > 0) || c.solve.N < 4) throw ConfigError("solve: need R > 0 and N >= 4");
  c.exterior_spec = s.value("exterior", json{{"type", "constant"}, {"value", 0.0}});
  c.solve.exterior = exterior_from_json(c.exterior_spec, n);
  std::string interp = get<std::string>(s, "interp", "cubic", ws);
  if (interp != "cubic" && interp != "linear") throw ConfigError("solve.interp must be cubic or linear");
  c.solve.interp = interp == "cubic" ? Interp::cubic : Interp::linear;
  c.solve.tau0 = num(s, "tau0", 0.0, ws);
  c.solve.residual_tol = num(s, "residual_tol", c.solve.residual_tol, ws);
  c.solve.max_iters = get<int>(s, "max_iters", c.solve.max_iters, ws);
  if (!(c.solve.residual_tol > 0) || c.solve.tau0 < 0) throw ConfigError("solve: need residual_tol > 0, tau0 >= 0");
  c.solve.warm_start = get<bool>(s, "warm_start", true, ws);
  std::string pc = get<std::string>(s, "precond", "jacobian", ws);
  if (pc == "jacobian") c.solve.precond = Preconditioner::jacobian;
  else if (pc == "linear") c.solve.precond = Preconditioner::linear;
  else if (pc == "none") c.solve.precond = Preconditioner::none;
  else throw ConfigError("solve.precond must be jacobian, linear or none");
  if (s.contains("continuation"))
    for (const auto& st : s.at("continuation")) {
      auto v = st.get<std::vector<double>>();
      if (v.size() != 2) throw ConfigError("solve.continuation entries are [p, q]");
      c.solve.continuation.emplace_back(v[0], v[1]);
    }

  json k = j.value("constants", json::object());
  check_keys(k, {"epsilon", "probes"}, "constants");
  c.epsilon = num(k, "epsilon", 0.0, "constants");
  c.selection.probes = get<int>(k, "probes", c.selection.probes, "constants");

  json r = j.value("reglab", json::object());
  check_keys(r, {"center", "levels", "gamma", "i_min", "i_max"}, "reglab");
  c.center = r.contains("center") ? to_point(r.at("center"), n, "reglab.center") : Point(Point::Zero(n));
  c.levels = get<int>(r, "levels", 5, "reglab");
  c.gamma = num(r, "gamma", 0.0, "reglab");
  c.i_min = get<int>(r, "i_min", 1, "reglab");
  c.i_max = get<int>(r, "i_max", 5, "reglab");
  if (c.levels < 1) throw ConfigError("reglab.levels must be >= 1");

  json e = j.value("eval", json::object());
  check_keys(e, {"u", "file", "points"}, "eval");
  c.eval_u = get<std::string>(e, "u", "beta", "eval");
  if (c.eval_u != "beta" && c.eval_u != "solve" && c.eval_u != "file")
    throw ConfigError("eval.u must be beta, solve or file");
  if (c.eval_u == "file") {
    if (!e.contains("file")) throw ConfigError("eval.file is required when eval.u is file");
    c.eval_file = base_dir / e.at("file").get<std::string>();
    fs::path side = c.eval_file;
    side += ".json";
    if (!fs::exists(side)) throw ConfigError("referenced file does not exist: " + side.string());
  }
  if (e.contains("points"))
    for (const auto& p : e.at("points")) c.eval_points.push_back(to_point(p, n, "eval.points"));

  json sc = j.value("scaling", json::object());
  check_keys(sc, {"pairs", "probes", "u"}, "scaling");
  if (sc.contains("pairs")) {
    c.scaling_pairs.clear();
    for (const auto& pr : sc.at("pairs")) {
      auto v = pr.get<std::vector<double>>();
      if (v.size() != 2 || !(v[0] > 0) || !(v[1] > 0)) throw ConfigError("scaling.pairs entries are [lambda > 0, mu > 0]");
      c.scaling_pairs.emplace_back(v[0], v[1]);
    }
  }
  c.scaling_probes = get<int>(sc, "probes", 8, "scaling");
  c.scaling_u = get<std::string>(sc, "u", "beta", "scaling");
  if (c.scaling_u != "beta" && c.scaling_u != "solve") throw ConfigError("scaling.u must be beta or solve");

  json in = j.value("inequalities", json::object());
  check_keys(in, {"draws", "c2_draws"}, "inequalities");
  c.fuzz_draws = get<std::uint64_t>(in, "draws", c.fuzz_draws, "inequalities");
  c.c2_draws = get<std::uint64_t>(in, "c2_draws", c.c2_draws, "inequalities");

  std::string out = get<std::string>(j, "output_dir", "out", "config");
  c.output_dir = fs::path(out).is_absolute() ? fs::path(out) : base_dir / out;

  j["seed"] = c.seed;
  c.raw = j;
  json hashed = j;
  hashed.erase("output_dir");
  c.hash = fnv1a_hex(dump_json(hashed, 0));
  return c;
}

ExperimentConfig load_config(const fs::path& path, const std::vector<std::string>& overrides,
                             std::optional<std::uint64_t> seed) {
  if (!fs::exists(path)) throw ConfigError("config file does not exist: " + path.string());
  json j;
  try {
    j = json::parse(read_text(path), nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  for (const auto& o : overrides) apply_override(j, o);
  if (seed) j["seed"] = *seed;
  try {
    return parse_config(std::move(j), path.has_parent_path() ? path.parent_path() : fs::path("."));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

}  // namespace nldp

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "nldp/config.hpp"
#include "nldp/report.hpp"

using namespace nldp;
namespace fs = std::filesystem;

namespace {

const fs::path configs = fs::path(NLDP_SOURCE_DIR) / "configs";

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("nldp_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

json minimal() {
  return json::parse(R"({"schema": "nldp.config/1",
    "problem": {"n": 1, "s": 0.6, "t": 0.5, "p": 2.0, "q": 2.2}})");
}

}  // namespace

TEST_CASE("floats serialize with 17 significant digits and round-trip") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(INFINITY) == "inf");
  CHECK(format_double(-INFINITY) == "-inf");
  CHECK(format_double(NAN) == "nan");
  for (double v : {M_PI, 1e-300, -2.5e17, 6.02214076e23}) CHECK(std::stod(format_double(v)) == v);
  json j = {{"b", 0.1}, {"a", {1, 2.5}}, {"c", "x"}, {"d", json::object()}};
  std::string s = dump_json(j);
  CHECK(s == dump_json(json::parse(s)));
  CHECK(s.find("\"a\"") < s.find("\"b\""));
  CHECK(json::parse(s)["b"].get<double>() == 0.1);
  CHECK(dump_json(json{{"x", NAN}}, 0) == "{\"x\":\"nan\"}\n");
}

TEST_CASE("fnv1a matches the reference vectors") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("overrides follow dotted paths") {
  json j = minimal();
  apply_override(j, "problem.q=2.1");
  apply_override(j, "solve.exterior.type=step");
  apply_override(j, "reglab.center=[0.25]");
  CHECK(j["problem"]["q"].get<double>() == 2.1);
  CHECK(j["solve"]["exterior"]["type"] == "step");
  CHECK(j["reglab"]["center"][0].get<double>() == 0.25);
  CHECK_THROWS_AS(apply_override(j, "noequals"), ConfigError);
  CHECK_THROWS_AS(apply_override(j, "problem.q.x=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(j, "a..b=1"), ConfigError);
}

TEST_CASE("config parsing and validation") {
  auto c = parse_config(minimal());
  CHECK(c.problem.exponents.q == 2.2);
  CHECK(c.problem.a.is_zero());
  CHECK(c.solve.N == 257);
  CHECK(c.center.size() == 1);

  json j = minimal();
  j.erase("schema");
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = minimal();
  j["schema"] = "nldp.config/0";
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = minimal();
  j["problem"]["extra"] = 1;
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = minimal();
  j["problem"]["coefficient"] = {{"type", "custom-table"}, {"file", "missing.csv"}};
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = minimal();
  j["solve"] = {{"exterior", {{"type", "spiral"}}}};
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = minimal();
  j["problem"]["n"] = 3;
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = minimal();
  j["eval"] = {{"u", "file"}, {"file", "nowhere/solution"}};
  CHECK_THROWS_AS(parse_config(j), ConfigError);

  j = minimal();
  j["problem"]["coefficient"] = {{"type", "indicator-of-halfspace"}, {"normal", {1.0}}, {"value", 2.0}};
  j["solve"] = {{"exterior", {{"type", "tanh"}, {"amplitude", 0.5}, {"rate", 2.0}, {"offset", 0.2}}}};
  auto h = parse_config(j);
  CHECK(h.problem.a.M() == 2.0);
  CHECK(h.problem.a(point(0.5), point(0.0)) == 2.0);
  CHECK(h.problem.a(point(-0.5), point(0.0)) == 0.0);
  CHECK(h.solve.exterior.sup == doctest::Approx(0.7));
  CHECK(h.solve.exterior.inf == doctest::Approx(-0.3));
  CHECK(h.solve.exterior(point(10.0)) == doctest::Approx(0.7));
}

TEST_CASE("config hash tracks content but not the output directory") {
  auto a = parse_config(minimal());
  json j = minimal();
  j["output_dir"] = "elsewhere";
  CHECK(parse_config(j).hash == a.hash);
  j["seed"] = 5;
  CHECK(parse_config(j).hash != a.hash);
  j = minimal();
  j["seed"] = 20240917;
  CHECK(parse_config(j).hash == a.hash);
}

TEST_CASE("shipped configs load") {
  for (const char* name : {"desk.json", "pipeline_1d.json", "checkerboard_2d.json"}) {
    auto c = load_config(configs / name);
    CHECK(c.raw.contains("schema"));
    CHECK_NOTHROW(c.problem.validate());
  }
  auto c = load_config(configs / "desk.json", {"problem.q=2.1"}, 99);
  CHECK(c.problem.exponents.q == 2.1);
  CHECK(c.seed == 99);
  CHECK_THROWS_AS(load_config(configs / "absent.json"), ConfigError);
}

TEST_CASE("custom tables read from files next to the config") {
  auto dir = scratch("tables");
  write_atomic(dir / "a.csv", "x,a\n-1,0\n0,1\n1,0.5\n");
  write_atomic(dir / "k.csv", "# radii\n0,1\n1,2\n");
  json j = minimal();
  j["problem"]["coefficient"] = {{"type", "custom-table"}, {"file", "a.csv"}};
  j["problem"]["kernel"] = {{"type", "custom-table"}, {"Lambda", 2.0}, {"file", "k.csv"}};
  auto c = parse_config(j, dir);
  CHECK(c.problem.a(point(0.5), point(0.1)) == doctest::Approx(0.75));
  CHECK(c.problem.a.M() == 1.0);
  CHECK(c.problem.Ksp.tag() != "gagliardo");
}

TEST_CASE("atomic writes leave no temporaries") {
  auto dir = scratch("atomic");
  write_atomic(dir / "sub" / "f.txt", "one");
  write_atomic(dir / "sub" / "f.txt", "two");
  CHECK(read_text(dir / "sub" / "f.txt") == "two");
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir / "sub")) files += e.is_regular_file();
  CHECK(files == 1);
}

TEST_CASE("grid functions round-trip through CSV and sidecar") {
  auto dir = scratch("grid");
  ArtifactMeta meta{"abc", NLDP_VERSION, "test", 1};
  json ext = {{"type", "step"}, {"left", -1.0}, {"right", 0.5}};
  auto u = GridFunction::sample(2, 1.0, 9, [](const Point& x) { return std::sin(3 * x(0)) * std::exp(x(1)) / 3; },
                                exterior_from_json(ext, 2));
  write_grid_function(dir / "u", u, ext, meta);
  auto v = read_grid_function(dir / "u");
  CHECK(v.dim() == 2);
  CHECK(v.h() == u.h());
  CHECK((v.values() - u.values()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(v(point(3.0, 0.0)) == 0.5);
  CHECK(v(point(0.31, -0.2)) == u(point(0.31, -0.2)));
  auto side = json::parse(read_text(dir / "u.json"));
  CHECK(side["meta"]["config_hash"] == "abc");
  CHECK(read_text(dir / "u.csv").rfind("# nldp", 0) == 0);
}

TEST_CASE("trace tables carry one row per level") {
  OscillationTrace t;
  t.levels.resize(3);
  for (int k = 0; k < 3; ++k) {
    t.levels[k].level = k;
    t.levels[k].radius = std::exp2(-k);
  }
  auto c = trace_table(t);
  CHECK(c.rows.size() == 3);
  CHECK(c.header.front() == "level");
  ArtifactMeta meta;
  CHECK(c.str(meta).find("0.5") != std::string::npos);
  t.center = point(0.0);
  t.fitted_gamma = NAN;
  CHECK(to_json(t)["fitted_gamma"] == "nan");
}

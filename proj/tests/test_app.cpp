#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fpl/config.hpp"
#include "fpl/dataset.hpp"
#include "fpl/error.hpp"
#include "fpl/pipeline.hpp"

using namespace fpl;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"(
model: aiii
period: 1.0
fixed: {g: 0.2}
sweep:
  theta_re: {min: 0.1, max: 0.7, count: 3}
  theta_im: {min: 0.2, max: 0.2, count: 1}
grid: {nk: 32, nt: 16, substeps: 32}
kernel: {epsilon: 0.01}
jobs: 2
)";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fpl_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text, "run.yaml");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigError);
    return e.what();
  }
  return "";
}

// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF rows.
std::vector<std::vector<std::string>> parse_csv(const std::string& s) {
  std::vector<std::vector<std::string>> rows(1);
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quoted) {
      if (c == '"' && i + 1 < s.size() && s[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      rows.back().push_back(field);
      field.clear();
    } else if (c == '\r' && i + 1 < s.size() && s[i + 1] == '\n') {
      rows.back().push_back(field);
      field.clear();
      rows.emplace_back();
      ++i;
    } else {
      field += c;
    }
  }
  if (rows.back().empty()) rows.pop_back();
  return rows;
}

}  // namespace

TEST_CASE("config parsing and validation") {
  const RunConfig c = parse_config(kSmall, "small.yaml");
  CHECK(c.model == "aiii");
  CHECK(c.sweep.size() == 2);
  CHECK(c.grid.nk == 32);
  CHECK(c.jobs == 2);
  const auto pts = sample_points(c);
  REQUIRE(pts.size() == 3);
  CHECK(pts[0] == std::vector<double>{0.1, 0.2});
  CHECK(pts[2][0] == doctest::Approx(0.7));
  CHECK(config_hash(c) == config_hash(parse_config(kSmall, "other.yaml")));

  CHECK(config_error("model: aiii\nfixed: {g: 0.2, theta_re: 0.1}\n").find("theta_im") != std::string::npos);
  CHECK(config_error("model: foo\n").find("model") != std::string::npos);
  CHECK(config_error("model: aiii\ncolour: red\nfixed: {g: 0.2, theta_re: 0.1, theta_im: 0.1}\n").find("colour") !=
        std::string::npos);
  const std::string line = config_error("model: aiii\nfixed: {g: 0.2, theta_re: 0.1, theta_im: 0.1}\nperiod: -1\n");
  CHECK(line.find("run.yaml:3") != std::string::npos);
  CHECK(line.find("period") != std::string::npos);
  CHECK(config_error("model: dclass\nfixed: {g: 0.5}\nsweep: {j1: {min: 0, max: 1, count: 2}, j2: {min: 0, max: 1, "
                     "count: 2}}\nsampling: random\nsamples: 4\n")
            .find("seed") != std::string::npos);
}

TEST_CASE("random sampling is reproducible") {
  const std::string text =
      "model: two_da\nfixed: {delta: 0.5}\nsweep: {j: {min: 0.1, max: 3.0, count: 1}}\nsampling: random\n"
      "samples: 5\nseed: 42\n";
  const RunConfig a = parse_config(text);
  const auto p = sample_points(a);
  CHECK(p.size() == 5);
  CHECK(p == sample_points(parse_config(text)));
  for (const auto& v : p) {
    CHECK(v[0] >= 0.1);
    CHECK(v[0] <= 3.0);
  }
  CHECK(a.grid.dims == 2);
}

TEST_CASE("dataset round trip and manifest hash") {
  const RunConfig c = parse_config(kSmall);
  const Dataset d = generate(c);
  REQUIRE(d.samples.size() == 3);
  const fs::path dir = scratch("dataset");
  const std::string h1 = write_dataset(d, dir);
  const Dataset back = read_dataset(dir);
  CHECK(back.model_tag == d.model_tag);
  CHECK(back.grid == d.grid);
  REQUIRE(back.fields.size() == d.fields.size());
  for (std::size_t i = 0; i < d.fields.size(); ++i) {
    CHECK(back.fields[i].nx == d.fields[i].nx);
    CHECK(back.fields[i].nz == d.fields[i].nz);
  }
  const fs::path dir2 = scratch("dataset2");
  CHECK(write_dataset(generate(c), dir2) == h1);

  std::ifstream in(dir / "manifest.json");
  std::stringstream ss;
  ss << in.rdbuf();
  auto j = nlohmann::json::parse(ss.str());
  j["version"] = "ffo-v0";
  std::ofstream(dir / "manifest.json") << j.dump();
  CHECK_THROWS_AS(read_dataset(dir), Error);
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("pipeline outputs: CSV, SVG and consistency") {
  const RunConfig c = parse_config(kSmall);
  Dataset d = generate(c);
  CHECK(annotate(d, 1) == 0);
  ClusterSettings s;
  s.epsilon = 0.01;
  s.jobs = 1;
  const ClusterReport r = cluster_dataset(d, s);
  const auto rows = merge_rows(d, r);
  const Consistency k = check_consistency(d, rows);
  CHECK(k.unannotated == 0);

  const auto table = parse_csv(rows_csv(d, rows));
  REQUIRE(table.size() == 4);
  CHECK(table[0][0] == "id");
  for (const auto& row : table) CHECK(row.size() == table[0].size());
  const auto ev = parse_csv(eigenvalues_csv(r));
  CHECK(ev.size() == static_cast<std::size_t>(r.eigenvalues.size()) + 1);

  const std::string svg = diagram_svg(d, rows);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);

  const ClusterReport back = report_from_json(report_json(r));
  CHECK(back.ids == r.ids);
  ClusterReport wrong = r;
  wrong.ids.back() = 999;
  CHECK_THROWS_AS(merge_rows(d, wrong), Error);
}

TEST_CASE("model construction scales to pi/T") {
  const DriveModel m = make_model("dclass", {"j1", "j2"}, {2.0, 1.0}, {{"g", 0.5}}, 2.0);
  const DClass& dc = std::get<DClass>(m);
  CHECK(dc.j1 == doctest::Approx(kPi));
  CHECK(dc.g == doctest::Approx(0.25 * kPi));
  CHECK(dc.period == 2.0);
  CHECK_THROWS_AS(make_model("dclass", {"j1"}, {2.0}, {{"g", 0.5}}, 1.0), Error);
}

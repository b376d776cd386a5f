#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "brw/io.hpp"
#include "brw/spectrum.hpp"
#include "fixtures.hpp"

#include <cmath>
#include <limits>
#include <sstream>

using namespace brw;
using nlohmann::json;

namespace {

const char* kLawA = R"({
  "d": 1,
  "repr": "explicit",
  "atoms": [
    {"p": "1", "offspring": [{"x": ["0"], "phi": "1"}, {"x": ["1"], "phi": 1}]}
  ]
})";

std::filesystem::path scratch(const std::string& name, const std::string& text) {
  const auto dir = std::filesystem::temp_directory_path() / "brw_test_io";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  write_text(path, text);
  return path;
}

std::string schema_field(const std::string& text) {
  try {
    parse_law(json::parse(text));
  } catch (const SchemaError& e) {
    return e.field();
  }
  return "<accepted>";
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
  return out;
}

}  // namespace

TEST_CASE("law A parses with exact values") {
  const BranchLaw law = parse_law(json::parse(kLawA));
  CHECK(law.dim() == 1);
  CHECK(law.mean_offspring() == 2.0);
  CHECK(law.intensity().exact());
  CHECK(validate(law).mean_offspring == 2.0);
  CHECK(std::abs(p_tilde(law, fixtures::vec({1.0})).value - std::log(1.0 + std::exp(1.0))) <= 1e-15);
}

TEST_CASE("iid compound documents") {
  const BranchLaw law = parse_law(json::parse(R"({
    "d": 2, "repr": "iid_compound",
    "n_law": [{"n": 8, "p": "1"}],
    "mu": [{"x": ["0", "0"], "phi": "1", "p": "0.25"}, {"x": ["1", "0"], "phi": "1", "p": "0.25"},
           {"x": ["0", "1"], "phi": "1", "p": "0.25"}, {"x": ["1", "1"], "phi": "1", "p": "0.25"}]})"));
  CHECK(law.mean_offspring_exact() == 8);
  CHECK_FALSE(law.is_explicit());
}

TEST_CASE("schema errors name the offending field") {
  CHECK(schema_field(R"({"d": 1, "repr": "explicit", "atoms": [{"p": "1", "offspring": [{"x": ["0"], "phi": "1"}, {"x": ["1"]}]}]})") ==
        "atoms[0].offspring[1].phi");
  CHECK(schema_field(R"({"repr": "explicit", "atoms": []})") == "d");
  CHECK(schema_field(R"({"d": 1, "repr": "tree", "atoms": []})") == "repr");
  CHECK(schema_field(R"({"d": 1, "repr": "explicit", "atoms": [{"p": "1", "offspring": [{"x": ["0", "1"], "phi": "1"}]}]})") ==
        "atoms[0].offspring[0].x");
  CHECK(schema_field(R"({"d": 1, "repr": "explicit", "atoms": [{"p": "abc", "offspring": []}]})") == "atoms[0].p");
  CHECK(schema_field(R"({"d": 1, "repr": "iid_compound", "n_law": [{"n": -1, "p": "1"}], "mu": [{"x": [0], "phi": 1, "p": 1}]})") ==
        "n_law[0].n");
  CHECK(schema_field(R"({"d": 1, "repr": "explicit", "atoms": [{"p": "1", "offspring": [{"x": ["0"], "phi": "-1"}]}]})") ==
        "atoms[0].offspring[0].phi");
  try {
    parse_law(json::parse(R"({"d": 1, "repr": "explicit", "atoms": [{"p": "1", "offspring": [{"x": ["0"]}]}]})"));
    FAIL("accepted a document without phi");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("phi") != std::string::npos);
  }
}

TEST_CASE("loading validates and reports malformed files") {
  CHECK(load_law(scratch("a.json", kLawA)).mean_offspring() == 2.0);

  const auto bad_sum = scratch("sum.json", R"({"d": 1, "repr": "explicit", "atoms": [
    {"p": "0.999999999", "offspring": [{"x": ["0"], "phi": "1"}, {"x": ["1"], "phi": "1"}]}]})");
  try {
    load_law(bad_sum);
    FAIL("accepted probabilities summing to 0.999999999");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("probab") != std::string::npos);
  }

  const auto broken = scratch("broken.json", "{\n  \"d\": 1,\n  \"repr\": \"explicit\",\n  oops\n}\n");
  try {
    load_law(broken);
    FAIL("accepted malformed JSON");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
  CHECK_THROWS(load_law(std::filesystem::temp_directory_path() / "brw_test_io" / "missing.json"));
}

TEST_CASE("number formatting round-trips and refuses NaN") {
  for (double v : {0.0, 0.1, -2.5, 1e-300, 6.02214076e23, std::log(2.0)}) CHECK(std::stod(format_number(v)) == v);
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK_THROWS_AS(format_number(std::nan("")), std::logic_error);
  CHECK_THROWS_AS(json_number(std::nan("")), std::logic_error);
  CHECK(json_number(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(json_vector(fixtures::vec({1.5, -2.0})) == json::array({1.5, -2.0}));
}

TEST_CASE("csv tables") {
  CsvTable t{{"a", "b"}, {}};
  t.add_row({"1", "2"});
  CHECK(t.str() == "a,b\n1,2\n");
  CHECK_THROWS_AS(t.add_row({"1"}), std::logic_error);
}

TEST_CASE("sha256 and json dumps are stable") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const json doc = {{"b", 1}, {"a", json_number(0.1)}};
  CHECK(dump_json(doc) == dump_json(json::parse(dump_json(doc))));
  CHECK(dump_json(doc).back() == '\n');
}

TEST_CASE("csv and json renderings of a spectrum agree") {
  const BranchLaw law = parse_law(json::parse(kLawA));
  std::vector<Eigen::VectorXd> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(fixtures::vec({i / 20.0}));
  const auto rows = spectrum_table(law, grid, Metric::unit);
  CsvTable csv{{"alpha_1", "dim_unit"}, {}};
  json arr = json::array();
  for (const auto& r : rows) {
    csv.add_row({format_number(r.alpha[0]), format_number(r.dim_unit_metric)});
    arr.push_back({{"alpha", json_vector(r.alpha)}, {"dim_unit", json_number(r.dim_unit_metric)}});
  }
  const json back = json::parse(dump_json(arr));
  std::stringstream ss(csv.str());
  std::string line;
  std::getline(ss, line);
  for (std::size_t i = 0; std::getline(ss, line); ++i) {
    const auto cells = split(line);
    CHECK(std::stod(cells[0]) == back[i]["alpha"][0].get<double>());
    CHECK(std::stod(cells[1]) == back[i]["dim_unit"].get<double>());
  }
}

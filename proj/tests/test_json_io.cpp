#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "pricer/json_io.hpp"
#include "pricer/solver.hpp"

using namespace pricer;

namespace {
const double ln2 = std::log(2.0);

ValueDistribution three_uniform() {
  return validate_distribution({3, 4, 12}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}
}  // namespace

TEST_CASE("json_number uses 12 significant digits") {
  CHECK(json_number(3.0) == "3");
  CHECK(json_number(0.1) == "0.1");
  CHECK(json_number(7.5) == "7.5");
  CHECK(json_number(ln2) == "0.69314718056");
  CHECK(json_number(1e-12) == "1e-12");
  CHECK(json_number(0.0) == "0");
}

TEST_CASE("distribution serialization round trip") {
  ValueDistribution d = three_uniform();
  std::string s = to_json(d);
  CHECK(s ==
        "{\"masses\":[0.333333333333,0.333333333333,0.333333333333],"
        "\"values\":[3,4,12]}");
  ValueDistribution back = parse_distribution(nlohmann::json::parse(s));
  REQUIRE(back.size() == 3);
  CHECK(back.values == d.values);
  CHECK(back.masses[0] == Catch::Approx(d.masses[0]).epsilon(1e-9));
  // Re-serializing the parse is byte-stable.
  CHECK(to_json(back) == s);
}

TEST_CASE("curve serialization round trip") {
  PricingCurve c = make_curve({PricePost{0.0, 7.5}, PricePost{ln2, 3.0}}, ln2);
  std::string s = to_json(c);
  CHECK(s ==
        "{\"horizon\":0.69314718056,\"posts\":[{\"p\":7.5,\"t\":0},"
        "{\"p\":3,\"t\":0.69314718056}]}");
  PricingCurve back = parse_curve(nlohmann::json::parse(s));
  REQUIRE(back.posts.size() == 2);
  CHECK(back.horizon == Catch::Approx(ln2).epsilon(1e-11));
  CHECK(back.posts[0].price == 7.5);
  CHECK(to_json(back) == s);
}

TEST_CASE("menu schedule and adaptive mechanism round trips") {
  MenuSchedule ms;
  ms.menus = {TimedMenu{0.0, {MenuOption{0.5, 13.0}}}, TimedMenu{ln2, {MenuOption{0.5, 7.0}}}};
  std::string s = to_json(ms);
  MenuSchedule back = parse_menu_schedule(nlohmann::json::parse(s));
  REQUIRE(back.menus.size() == 2);
  CHECK(back.menus[1].options[0].p == 7.0);
  CHECK(to_json(back) == s);

  AdaptiveMechanism mech;
  mech.branches.resize(2);
  mech.branches[0].options = {AdaptiveOption{0.0, 1.0, 101.25}};
  mech.branches[1].options = {AdaptiveOption{0.25, 0.5, 100.0}, AdaptiveOption{1.0, 1.0, 101.0}};
  std::string a = to_json(mech);
  AdaptiveMechanism mback = parse_adaptive(nlohmann::json::parse(a));
  REQUIRE(mback.branches.size() == 2);
  CHECK(mback.branches[1].options[0].x == 0.5);
  CHECK(to_json(mback) == a);
}

TEST_CASE("curve mixture serializes as a weighted array") {
  CurveDistribution cd;
  cd.curves.push_back(WeightedCurve{0.5, make_curve({PricePost{0.0, 2.0}}, 1.0)});
  cd.curves.push_back(WeightedCurve{0.5, make_curve({}, 1.0)});
  std::string s = to_json(cd);
  nlohmann::json j = nlohmann::json::parse(s);
  REQUIRE(j.is_array());
  REQUIRE(j.size() == 2);
  CHECK(j[0]["weight"].get<double>() == 0.5);
  CHECK(j[0]["curve"]["posts"].size() == 1);
  CHECK(j[1]["curve"]["posts"].empty());
}

TEST_CASE("solution serialization keeps keys sorted") {
  ValueDistribution d = three_uniform();
  OptimalSolution sol = solve_optimal(d, ln2);
  std::string s = solution_to_json(sol, d, {{"oracle", "4.48"}, {"table", "[]"}});
  nlohmann::json j = nlohmann::json::parse(s);
  CHECK(j["revenue"].get<double>() == Catch::Approx(4.5).epsilon(1e-9));
  CHECK(j["v_min"].get<double>() == 3.0);
  CHECK(j["c"].get<double>() == Catch::Approx(2.0 / 3.0).epsilon(1e-9));
  REQUIRE(j["assignment"].size() == 3);
  CHECK(j["assignment"][2]["p"].get<double>() == Catch::Approx(7.5));
  CHECK(j["grouping"] == nlohmann::json::parse("[0,0,2]"));

  // Physical key order is alphabetical, so output is byte-deterministic.
  std::size_t last = 0;
  for (const char* key : {"\"assignment\"", "\"c\"", "\"curve\"", "\"grouping\"", "\"oracle\"",
                          "\"revenue\"", "\"table\"", "\"v_min\""}) {
    std::size_t pos = s.find(key);
    REQUIRE(pos != std::string::npos);
    CHECK(pos > last);
    last = pos;
  }
}

TEST_CASE("enum rows serialize with the monotone flag") {
  ValueDistribution d = three_uniform();
  EnumResult r = solve_enum(d, ln2);
  bool saw_invalid = false;
  for (const EnumRow& row : r.table) {
    nlohmann::json j = nlohmann::json::parse(enum_row_to_json(row, d));
    CHECK(j.contains("grouping"));
    CHECK(j.contains("prices"));
    CHECK(j.contains("span"));
    if (!j["monotone"].get<bool>()) saw_invalid = true;
  }
  CHECK(saw_invalid);
}

TEST_CASE("family parsing") {
  nlohmann::json uj = nlohmann::json::parse("{\"family\":\"uniform\",\"lo\":0,\"hi\":2}");
  CHECK(is_family_json(uj));
  QuantileOracle u = parse_family(uj);
  CHECK(u.inverse_cdf(0.5) == 1.0);
  CHECK(u.upper_bound == 2.0);

  nlohmann::json ej =
      nlohmann::json::parse("{\"family\":\"exponential\",\"rate\":1,\"truncate\":8}");
  QuantileOracle e = parse_family(ej);
  CHECK(e.inverse_cdf(1.0) == Catch::Approx(8.0));

  CHECK_FALSE(is_family_json(nlohmann::json::parse("{\"values\":[1],\"masses\":[1]}")));
  CHECK_THROWS_AS(parse_family(nlohmann::json::parse("{\"family\":\"beta\"}")),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_family(nlohmann::json::parse("{\"family\":\"uniform\",\"lo\":0}")),
                  std::invalid_argument);
}

TEST_CASE("parse errors surface as invalid_argument") {
  CHECK_THROWS_AS(parse_distribution(nlohmann::json::parse("{\"values\":[1,2]}")),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_distribution(nlohmann::json::parse("{\"values\":[1,\"x\"],\"masses\":[1,1]}")),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_curve(nlohmann::json::parse("{\"horizon\":1}")), std::invalid_argument);
  CHECK_THROWS_AS(parse_curve(nlohmann::json::parse("{\"horizon\":1,\"posts\":[{\"p\":1}]}")),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_menu_schedule(nlohmann::json::parse("{}")), std::invalid_argument);
  CHECK_THROWS_AS(parse_adaptive(nlohmann::json::parse("{\"branches\":[{}]}")),
                  std::invalid_argument);
}

TEST_CASE("file io round trip and failure modes") {
  std::filesystem::path path = temp_file("pricer_json_io_test.json");
  write_text_file(path.string(), "{\"values\":[5],\"masses\":[1]}");
  nlohmann::json j = read_json_file(path.string());
  CHECK(parse_distribution(j).values[0] == 5.0);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(read_json_file("/nonexistent/path.json"), std::invalid_argument);
  CHECK_THROWS_AS(write_text_file("/nonexistent/dir/file.json", "x"), std::invalid_argument);

  std::filesystem::path bad = temp_file("pricer_json_io_bad.json");
  write_text_file(bad.string(), "{not json");
  CHECK_THROWS_AS(read_json_file(bad.string()), std::invalid_argument);
  std::filesystem::remove(bad);
}

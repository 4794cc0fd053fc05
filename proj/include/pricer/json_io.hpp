#pragma once

// JSON wire formats.  Parsing goes through nlohmann::json; output is emitted
// by hand with keys in alphabetical order and %.12g floats so that repeated
// runs produce byte-identical files.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "pricer/curve.hpp"
#include "pricer/distribution.hpp"
#include "pricer/lottery.hpp"
#include "pricer/solver.hpp"

namespace pricer {

inline std::string json_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return std::string(buf);
}

inline std::string json_array(const std::vector<double>& xs) {
  std::string s = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ",";
    s += json_number(xs[i]);
  }
  return s + "]";
}

inline std::string json_index_array(const std::vector<std::size_t>& xs) {
  std::string s = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(xs[i]);
  }
  return s + "]";
}

inline std::string to_json(const ValueDistribution& d) {
  return "{\"masses\":" + json_array(d.masses) + ",\"values\":" + json_array(d.values) + "}";
}

inline std::string to_json(const PricingCurve& c) {
  std::string s = "{\"horizon\":" + json_number(c.horizon) + ",\"posts\":[";
  for (std::size_t i = 0; i < c.posts.size(); ++i) {
    if (i) s += ",";
    s += "{\"p\":" + json_number(c.posts[i].price) + ",\"t\":" + json_number(c.posts[i].time) + "}";
  }
  return s + "]}";
}

inline std::string to_json(const CurveDistribution& cd) {
  std::string s = "[";
  for (std::size_t i = 0; i < cd.curves.size(); ++i) {
    if (i) s += ",";
    s += "{\"curve\":" + to_json(cd.curves[i].curve) +
         ",\"weight\":" + json_number(cd.curves[i].weight) + "}";
  }
  return s + "]";
}

inline std::string to_json(const MenuSchedule& ms) {
  std::string s = "{\"timestamps\":[";
  for (std::size_t i = 0; i < ms.menus.size(); ++i) {
    if (i) s += ",";
    s += "{\"options\":[";
    for (std::size_t j = 0; j < ms.menus[i].options.size(); ++j) {
      if (j) s += ",";
      s += "{\"p\":" + json_number(ms.menus[i].options[j].p) +
           ",\"x\":" + json_number(ms.menus[i].options[j].x) + "}";
    }
    s += "],\"t\":" + json_number(ms.menus[i].t) + "}";
  }
  return s + "]}";
}

inline std::string to_json(const AdaptiveMechanism& mech) {
  std::string s = "{\"branches\":[";
  for (std::size_t i = 0; i < mech.branches.size(); ++i) {
    if (i) s += ",";
    s += "{\"options\":[";
    const auto& opts = mech.branches[i].options;
    for (std::size_t j = 0; j < opts.size(); ++j) {
      if (j) s += ",";
      s += "{\"p\":" + json_number(opts[j].p) + ",\"t\":" + json_number(opts[j].t) +
           ",\"x\":" + json_number(opts[j].x) + "}";
    }
    s += "]}";
  }
  return s + "]}";
}

// Members given as (key, rendered value); emitted with keys sorted.
inline std::string json_object(std::vector<std::pair<std::string, std::string>> members) {
  std::sort(members.begin(), members.end());
  std::string s = "{";
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (i) s += ",";
    s += "\"" + members[i].first + "\":" + members[i].second;
  }
  return s + "}";
}

// extras lets callers attach pre-rendered values (e.g. an enumeration table)
// without breaking the sorted-key layout.
inline std::string solution_to_json(const OptimalSolution& sol, const ValueDistribution& d,
                                    std::vector<std::pair<std::string, std::string>> extras = {}) {
  std::string assignment = "[";
  bool first = true;
  for (std::size_t i = 0; i < sol.assignment.entries.size(); ++i) {
    if (!sol.assignment.entries[i]) continue;
    if (!first) assignment += ",";
    first = false;
    assignment += "{\"p\":" + json_number(sol.assignment.entries[i]->price) +
                  ",\"t\":" + json_number(sol.assignment.entries[i]->time) +
                  ",\"v\":" + json_number(d.values[i]) + "}";
  }
  assignment += "]";
  std::vector<std::pair<std::string, std::string>> members{
      {"assignment", assignment},
      {"c", json_number(sol.c)},
      {"curve", to_json(sol.curve)},
      {"grouping", json_index_array(sol.grouping.rep)},
      {"revenue", json_number(sol.revenue)},
      {"v_min", json_number(d.values[sol.v_min_index])}};
  for (auto& e : extras) members.push_back(std::move(e));
  return json_object(std::move(members));
}

inline std::string enum_row_to_json(const EnumRow& row, const ValueDistribution& d) {
  std::string s = "{\"grouping\":" + json_index_array(row.grouping);
  s += ",\"monotone\":";
  s += row.monotone ? "true" : "false";
  s += ",\"prices\":" + json_array(row.prices);
  s += ",\"revenue\":" + json_number(row.revenue);
  s += ",\"span\":" + json_number(row.span);
  s += ",\"v_min\":" + json_number(d.values[row.v_min_index]);
  return s + "}";
}

// Parsing.

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("invalid JSON in " + path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write file: " + path);
  out << content;
  if (!out) throw std::invalid_argument("write failed: " + path);
}

namespace detail {

inline double json_num_field(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j[key].is_number())
    throw std::invalid_argument(std::string("expected numeric field \"") + key + "\"");
  return j[key].get<double>();
}

inline std::vector<double> json_num_array(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j[key].is_array())
    throw std::invalid_argument(std::string("expected array field \"") + key + "\"");
  std::vector<double> out;
  for (const auto& e : j[key]) {
    if (!e.is_number())
      throw std::invalid_argument(std::string("non-numeric entry in \"") + key + "\"");
    out.push_back(e.get<double>());
  }
  return out;
}

}  // namespace detail

inline bool is_family_json(const nlohmann::json& j) {
  return j.is_object() && j.contains("family");
}

inline ValueDistribution parse_distribution(const nlohmann::json& j) {
  return validate_distribution(detail::json_num_array(j, "values"),
                               detail::json_num_array(j, "masses"));
}

inline QuantileOracle parse_family(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("family") || !j["family"].is_string())
    throw std::invalid_argument("expected a \"family\" object");
  std::string family = j["family"].get<std::string>();
  if (family == "uniform") {
    double lo = detail::json_num_field(j, "lo");
    double hi = detail::json_num_field(j, "hi");
    return make_uniform_oracle(lo, hi);
  }
  if (family == "exponential") {
    double rate = detail::json_num_field(j, "rate");
    double truncate = detail::json_num_field(j, "truncate");
    return make_exponential_oracle(rate, truncate);
  }
  throw std::invalid_argument("unknown family: " + family);
}

inline PricingCurve parse_curve(const nlohmann::json& j) {
  double horizon = detail::json_num_field(j, "horizon");
  if (!j.contains("posts") || !j["posts"].is_array())
    throw std::invalid_argument("expected array field \"posts\"");
  std::vector<PricePost> posts;
  for (const auto& e : j["posts"])
    posts.push_back(PricePost{detail::json_num_field(e, "t"), detail::json_num_field(e, "p")});
  return make_curve(posts, horizon);
}

inline MenuSchedule parse_menu_schedule(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("timestamps") || !j["timestamps"].is_array())
    throw std::invalid_argument("expected array field \"timestamps\"");
  MenuSchedule ms;
  for (const auto& slot : j["timestamps"]) {
    TimedMenu menu;
    menu.t = detail::json_num_field(slot, "t");
    if (!slot.contains("options") || !slot["options"].is_array())
      throw std::invalid_argument("expected array field \"options\"");
    for (const auto& o : slot["options"])
      menu.options.push_back(
          MenuOption{detail::json_num_field(o, "x"), detail::json_num_field(o, "p")});
    ms.menus.push_back(std::move(menu));
  }
  validate_menu_schedule(ms);
  return ms;
}

inline AdaptiveMechanism parse_adaptive(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("branches") || !j["branches"].is_array())
    throw std::invalid_argument("expected array field \"branches\"");
  AdaptiveMechanism mech;
  for (const auto& b : j["branches"]) {
    AdaptiveBranch branch;
    if (!b.is_object() || !b.contains("options") || !b["options"].is_array())
      throw std::invalid_argument("expected array field \"options\"");
    for (const auto& o : b["options"])
      branch.options.push_back(AdaptiveOption{detail::json_num_field(o, "t"),
                                              detail::json_num_field(o, "x"),
                                              detail::json_num_field(o, "p")});
    mech.branches.push_back(std::move(branch));
  }
  validate_adaptive(mech);
  return mech;
}

}  // namespace pricer

#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ncell/potential.hpp"

namespace ncell {

using AnyPotential = std::variant<CellPotential, NCellPotential, HeteroPotential>;

namespace detail {

using json = nlohmann::json;

inline double number_at(const json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where + ": expected a number");
  return j.get<double>();
}

inline const json& member(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing key \"" + key + "\"");
  return *it;
}

inline std::vector<Segment> parse_segments(const json& arr, const std::string& where) {
  if (!arr.is_array()) throw ParseError(where + ": expected an array of [x_lo, x_hi, v]");
  std::vector<Segment> segs;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string at = where + "[" + std::to_string(i) + "]";
    const auto& s = arr[i];
    if (!s.is_array() || s.size() != 3) throw ParseError(at + ": expected [x_lo, x_hi, v]");
    segs.push_back({number_at(s[0], at + "[0]"), number_at(s[1], at + "[1]"),
                    number_at(s[2], at + "[2]")});
  }
  return segs;
}

inline CellPotential parse_cell(const json& obj, const std::string& where) {
  if (obj.contains("kind") && obj["kind"] != "cell") {
    throw ParseError(where + ": expected kind \"cell\"");
  }
  double a = number_at(member(obj, "a", where), where + ".a");
  if (!(a > 0.0)) throw ValidationError(where + ": a must be positive");
  return build_cell(a, parse_segments(member(obj, "segments", where), where + ".segments"));
}

inline json segments_json(const std::vector<Segment>& segs) {
  json arr = json::array();
  for (const auto& s : segs) arr.push_back(json::array({s.x_lo, s.x_hi, s.v}));
  return arr;
}

inline json cell_json(const CellPotential& c) {
  return json{{"kind", "cell"}, {"a", c.a()}, {"segments", segments_json(c.segments())}};
}

}  // namespace detail

/// Parses a potential document: kind "cell", "ncell" or "hetero".
inline AnyPotential parse_potential(const std::string& text) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("potential document: ") + e.what());
  }
  const auto& kind = detail::member(doc, "kind", "$");
  if (!kind.is_string()) throw ParseError("$.kind: expected a string");
  const auto k = kind.get<std::string>();
  if (k == "cell") return detail::parse_cell(doc, "$");
  if (k == "ncell") {
    const auto& nj = detail::member(doc, "n", "$");
    if (!nj.is_number_integer()) throw ParseError("$.n: expected an integer");
    auto n = nj.get<long long>();
    if (n < 1) throw ValidationError("$.n: n must be >= 1");
    return NCellPotential(detail::parse_cell(detail::member(doc, "cell", "$"), "$.cell"),
                          static_cast<int>(n));
  }
  if (k == "hetero") {
    const auto& arr = detail::member(doc, "cells", "$");
    if (!arr.is_array()) throw ParseError("$.cells: expected an array");
    std::vector<HeteroCell> cells;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string at = "$.cells[" + std::to_string(i) + "]";
      const auto& c = arr[i];
      cells.push_back(HeteroCell::build(
          detail::number_at(detail::member(c, "x_lo", at), at + ".x_lo"),
          detail::number_at(detail::member(c, "x_hi", at), at + ".x_hi"),
          detail::parse_segments(detail::member(c, "segments", at), at + ".segments")));
    }
    return HeteroPotential(std::move(cells));
  }
  throw ParseError("$.kind: unknown kind \"" + k + "\"");
}

inline AnyPotential load_potential(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open potential file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_potential(ss.str());
}

inline std::string save_potential(const AnyPotential& pot) {
  using detail::json;
  json doc = std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, CellPotential>) {
          return detail::cell_json(p);
        } else if constexpr (std::is_same_v<T, NCellPotential>) {
          return json{{"kind", "ncell"}, {"n", p.n()}, {"cell", detail::cell_json(p.cell())}};
        } else {
          json cells = json::array();
          for (const auto& c : p.cells()) {
            cells.push_back(json{{"x_lo", c.x_lo()},
                                 {"x_hi", c.x_hi()},
                                 {"segments", detail::segments_json(c.segments())}});
          }
          return json{{"kind", "hetero"}, {"cells", cells}};
        }
      },
      pot);
  return doc.dump();
}

/// The single cell behind a cell or n-cell document.
inline CellPotential cell_of(const AnyPotential& pot) {
  if (auto c = std::get_if<CellPotential>(&pot)) return *c;
  if (auto nc = std::get_if<NCellPotential>(&pot)) return nc->cell();
  throw ValidationError("expected a cell or ncell potential, got hetero");
}

inline Layout layout_of(const AnyPotential& pot) {
  return std::visit([](const auto& p) { return layout_of(p); }, pot);
}

}  // namespace ncell

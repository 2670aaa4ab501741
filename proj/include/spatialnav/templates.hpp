#pragma once

// Prompt templates: a "key = value" text format with {placeholder} slots.
// The built-in set mirrors data/templates.txt byte for byte.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spatialnav/errors.hpp"

namespace spatialnav {

inline constexpr std::string_view kDefaultTemplateText = R"TEMPLATES(# Canonical English prompt templates.
# One "key = value" per line; "\n" inside a value is a line break.
# {placeholders} are filled by the renderer and recognised by the parser.

system.zero_shot = You are given a task to solve. Make sure to output an answer after "Answer:" without any explanation.
system.cot = You are given a task to solve. Make sure to output a final answer after "Answer:".

local.start = You start at a spot where you find {object}.
local.step = You move {direction} and find {object}.
local.final = Now, you move {direction}. What do you find?

global.intro = Here is the map.
global.start = You start at the location of {object}.
global.step = You move {direction}.
global.final = Now, you move {direction}. What do you find?

map.row_major = In the {ordinal} row, we have item {items}.
map.snake = In the {ordinal} row, from {from_side} to {to_side}, we have item {items}.
map.snake_transition = Then you move down by one step.
map.coord_item = {object} (row {row}, column {column})
map.random = At row {row}, column {column}, there is {object}.
map.ring = The map is a ring of {count} locations. Starting from the top and proceeding clockwise, we have item {items}.

tree.intro = Here is a family tree.
tree.edge = {parent} is the parent of {child}.
tree.cousin = What is the cousin of {object}?
tree.great_great_grandparent = What is the great-great-grandparent of {object}?
tree.great_great_grandchildren = What is/are the great-great-grandchild/children of {object}?

size.start_items = You start at a spot where you find {object}.
size.step_items = You move {direction} and find {object}.
size.start_plain = You start at a spot.
size.step_plain = You move {direction} by one step.
size.question = You have now visited every location of a rectangle exactly once. What are the height and width of the rectangle? Give the height first, then the width.

preamble.hexagon = The map is made of hexagons joined edge to edge, and you walk along the edges of the hexagons from corner to corner. Each corner joins at most three edges. At some corners the edges lead up, lower-left and lower-right; at the other corners they lead down, upper-left and upper-right. Walking once around a single hexagon takes six moves.
preamble.triangle = The map is a large triangle divided into small equilateral triangles, and you walk along their edges from corner to corner. From a corner you can move left, right, upper-left, upper-right, lower-left or lower-right while staying inside the map. Walking once around a small triangle takes three moves.

cot.block = Question:\n{question}\nExplanation:\n{explanation}\nAnswer:\n{answer}
cot.target = Question:\n{question}
cot.start = You start at {object}.
cot.step = Moving {direction}, you reach {object}.
cot.return = Moving {direction}, you return to the location of {object}.
cot.tree_up = The parent of {child} is {parent}.
cot.tree_down = The children of {parent} are {items}.
cot.tree_result = The answer is {items}.
cot.size = Each row holds {width} locations and you move down {downs} times, so there are {height} rows.
)TEMPLATES";

class Templates {
 public:
  static Templates parse(std::string_view text) {
    Templates t;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line.front() == '#') continue;
      const auto eq = line.find(" = ");
      if (eq == std::string::npos) {
        throw format_error("template line " + std::to_string(lineno) + " lacks ' = '");
      }
      std::string value;
      for (std::size_t i = eq + 3; i < line.size(); ++i) {
        if (line[i] == '\\' && i + 1 < line.size() && line[i + 1] == 'n') {
          value += '\n';
          ++i;
        } else {
          value += line[i];
        }
      }
      t.entries_[line.substr(0, eq)] = std::move(value);
    }
    return t;
  }

  static Templates load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open template file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  const std::string& get(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw render_error("missing template '" + key + "'");
    return it->second;
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  /// Substitutes {name} slots; every slot in the template must be supplied.
  std::string fill(const std::string& key,
                   std::initializer_list<std::pair<std::string_view, std::string_view>> values) const {
    const auto& tpl = get(key);
    std::string out;
    std::size_t i = 0;
    while (i < tpl.size()) {
      if (tpl[i] == '{') {
        const auto close = tpl.find('}', i);
        const auto name = std::string_view(tpl).substr(i + 1, close - i - 1);
        bool found = false;
        for (const auto& [k, v] : values) {
          if (k == name) {
            out += v;
            found = true;
            break;
          }
        }
        if (!found) throw render_error("template '" + key + "' needs {" + std::string(name) + "}");
        i = close + 1;
      } else {
        out += tpl[i++];
      }
    }
    return out;
  }

  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

inline const Templates& default_templates() {
  static const Templates t = Templates::parse(kDefaultTemplateText);
  return t;
}

/// "first" ... "twentieth", then numeric ordinals ("21st").
inline std::string ordinal(int n) {
  static constexpr std::string_view kWords[] = {
      "zeroth",    "first",     "second",     "third",      "fourth",    "fifth",    "sixth",
      "seventh",   "eighth",    "ninth",      "tenth",      "eleventh",  "twelfth",  "thirteenth",
      "fourteenth", "fifteenth", "sixteenth", "seventeenth", "eighteenth", "nineteenth",
      "twentieth"};
  if (n >= 0 && n <= 20) return std::string(kWords[n]);
  const int tens = n % 100;
  const char* suffix = (tens >= 11 && tens <= 13) ? "th"
                       : n % 10 == 1             ? "st"
                       : n % 10 == 2             ? "nd"
                       : n % 10 == 3             ? "rd"
                                                 : "th";
  return std::to_string(n) + suffix;
}

inline int parse_ordinal(std::string_view s) {
  for (int n = 0; n <= 200; ++n) {
    if (ordinal(n) == s) return n;
  }
  throw format_error("unknown ordinal '" + std::string(s) + "'");
}

/// "a", "a and b", "a, b, and c".
inline std::string join_items(const std::vector<std::string>& items) {
  if (items.empty()) return "";
  if (items.size() == 1) return items[0];
  if (items.size() == 2) return items[0] + " and " + items[1];
  std::string out;
  for (std::size_t i = 0; i + 1 < items.size(); ++i) out += items[i] + ", ";
  return out + "and " + items.back();
}

/// Inverse of join_items for labels free of ", " and " and ".
inline std::vector<std::string> split_items(std::string_view text) {
  std::vector<std::string> out;
  if (text.find(", ") != std::string_view::npos) {
    std::size_t start = 0;
    while (true) {
      const auto comma = text.find(", ", start);
      out.emplace_back(text.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 2;
    }
    if (out.back().rfind("and ", 0) == 0) out.back() = out.back().substr(4);
  } else if (const auto a = text.find(" and "); a != std::string_view::npos) {
    out.emplace_back(text.substr(0, a));
    out.emplace_back(text.substr(a + 5));
  } else {
    out.emplace_back(text);
  }
  return out;
}

}  // namespace spatialnav

#pragma once

// Natural-language rendering of task instances and the matching parser.
//
// Every object name a prompt mentions is produced through a template slot,
// so the parser can recover the exact walk, map listing and mention order
// from the text alone.

#include <algorithm>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "spatialnav/errors.hpp"
#include "spatialnav/instance.hpp"
#include "spatialnav/random.hpp"
#include "spatialnav/taskgen.hpp"
#include "spatialnav/templates.hpp"

namespace spatialnav {

/// 1-based (row, column) of every node in the map listing.
struct GridPosition {
  int row = 0;
  int column = 0;
};

inline std::vector<GridPosition> grid_positions(const TopologyMap& map) {
  std::vector<GridPosition> pos(map.node_count());
  const auto& rows = map.layout_rows();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      pos[rows[r][c]] = {static_cast<int>(r + 1), static_cast<int>(c + 1)};
    }
  }
  return pos;
}

/// Node order used by the "random" serialization, fixed by the instance seed.
inline std::vector<NodeId> random_listing_order(const TaskInstance& t) {
  std::vector<NodeId> order;
  for (const auto& row : t.world.map().layout_rows()) order.insert(order.end(), row.begin(), row.end());
  Rng rng(derive_seed(t.seed, "random-order"));
  rng.shuffle(order);
  return order;
}

/// Tree nodes (excluding the root) in statement order.
inline std::vector<NodeId> tree_statement_order(const TopologyMap& tree, SerializationOrder order) {
  std::vector<NodeId> out;
  if (order == SerializationOrder::tree_bfs) {
    std::vector<NodeId> queue{0};
    for (std::size_t h = 0; h < queue.size(); ++h) {
      for (auto c : tree.children(queue[h])) {
        out.push_back(c);
        queue.push_back(c);
      }
    }
  } else {
    std::vector<NodeId> stack{0};
    while (!stack.empty()) {
      const auto x = stack.back();
      stack.pop_back();
      if (x != 0) out.push_back(x);
      auto kids = tree.children(x);
      for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
    }
  }
  return out;
}

namespace detail {

inline std::string sentences(const std::vector<std::string>& parts, std::string_view sep = " ") {
  std::string out;
  for (const auto& p : parts) {
    if (p.empty()) continue;
    if (!out.empty()) out += sep;
    out += p;
  }
  return out;
}

inline std::string preamble(const TaskInstance& t, const Templates& tpl) {
  if (!t.flags.detailed_description) return "";
  const auto key = "preamble." + std::string(to_string(t.topology()));
  return tpl.has(key) ? tpl.get(key) : "";
}

inline std::string dir(Direction d) { return std::string(to_string(d)); }

inline std::string map_section(const TaskInstance& t, SerializationOrder order, const Templates& tpl) {
  const auto& map = t.world.map();
  const auto& w = t.world;
  const auto& rows = map.layout_rows();
  std::vector<std::string> parts;
  const auto pos = grid_positions(map);
  const auto coord_item = [&](NodeId n) {
    return tpl.fill("map.coord_item", {{"object", w.label(n)},
                                        {"row", std::to_string(pos[n].row)},
                                        {"column", std::to_string(pos[n].column)}});
  };
  switch (order) {
    case SerializationOrder::row_major:
      for (std::size_t r = 0; r < rows.size(); ++r) {
        parts.push_back(tpl.fill("map.row_major", {{"ordinal", ordinal(static_cast<int>(r + 1))},
                                                   {"items", join_items(labels_of(w, rows[r]))}}));
      }
      break;
    case SerializationOrder::snake:
    case SerializationOrder::snake_coord:
      for (std::size_t r = 0; r < rows.size(); ++r) {
        auto row = rows[r];
        const bool reverse = r % 2 == 1;
        if (reverse) std::reverse(row.begin(), row.end());
        std::vector<std::string> items;
        for (auto n : row) {
          items.push_back(order == SerializationOrder::snake_coord ? coord_item(n) : w.label(n));
        }
        if (r > 0) parts.push_back(tpl.get("map.snake_transition"));
        parts.push_back(tpl.fill("map.snake", {{"ordinal", ordinal(static_cast<int>(r + 1))},
                                               {"from_side", reverse ? "right" : "left"},
                                               {"to_side", reverse ? "left" : "right"},
                                               {"items", join_items(items)}}));
      }
      break;
    case SerializationOrder::random:
      for (auto n : random_listing_order(t)) {
        parts.push_back(tpl.fill("map.random", {{"row", std::to_string(pos[n].row)},
                                                {"column", std::to_string(pos[n].column)},
                                                {"object", w.label(n)}}));
      }
      break;
    case SerializationOrder::ring_clockwise:
      parts.push_back(tpl.fill("map.ring", {{"count", std::to_string(map.node_count())},
                                            {"items", join_items(labels_of(w, rows[0]))}}));
      break;
    default:
      throw render_error("order " + std::string(to_string(order)) + " has no map section");
  }
  return sentences(parts);
}

}  // namespace detail

inline PromptBundle make_bundle(const TaskInstance& t, std::string question, const Templates& tpl) {
  PromptBundle b;
  b.system_prompt = tpl.get("system.zero_shot");
  b.user_prompt = question;
  b.question = std::move(question);
  b.flags = t.flags;
  b.flags.coord_annotation = t.order == SerializationOrder::snake_coord;
  b.flags.cot_shots = 0;
  return b;
}

/// "You start at a spot where you find X. You move <d> and find Y. ...
/// Now, you move <d>. What do you find?"
inline PromptBundle render_local(const TaskInstance& t, const Templates& tpl = default_templates()) {
  if (t.kind != TaskKind::loop_closure_local) {
    throw render_error("render_local needs a loop_closure_local instance, got " +
                       std::string(to_string(t.kind)));
  }
  const auto& w = t.world;
  std::vector<std::string> parts{detail::preamble(t, tpl),
                                 tpl.fill("local.start", {{"object", w.label(t.walk.start)}})};
  for (std::size_t i = 0; i + 1 < t.walk.steps.size(); ++i) {
    const auto& s = t.walk.steps[i];
    parts.push_back(tpl.fill("local.step", {{"direction", detail::dir(s.direction)},
                                            {"object", w.label(s.node)}}));
  }
  parts.push_back(tpl.fill("local.final", {{"direction", detail::dir(t.walk.steps.back().direction)}}));
  return make_bundle(t, detail::sentences(parts), tpl);
}

/// Map listing in the given order, then navigation from the start node.
inline PromptBundle render_global(const TaskInstance& t, SerializationOrder order,
                                  const Templates& tpl = default_templates()) {
  if (t.kind != TaskKind::path_global) {
    throw render_error("render_global needs a path_global instance, got " +
                       std::string(to_string(t.kind)));
  }
  if (!order_applies(order, t.topology()) || order == SerializationOrder::none) {
    throw render_error("order " + std::string(to_string(order)) + " is incompatible with " +
                       t.world.map().descriptor().tag());
  }
  const auto& w = t.world;
  std::vector<std::string> nav{tpl.fill("global.start", {{"object", w.label(t.walk.start)}})};
  for (std::size_t i = 0; i + 1 < t.walk.steps.size(); ++i) {
    nav.push_back(tpl.fill("global.step", {{"direction", detail::dir(t.walk.steps[i].direction)}}));
  }
  nav.push_back(tpl.fill("global.final", {{"direction", detail::dir(t.walk.steps.back().direction)}}));
  const std::string head = detail::sentences({detail::preamble(t, tpl), tpl.get("global.intro")});
  return make_bundle(t,
                     detail::sentences({head, detail::map_section(t, order, tpl), detail::sentences(nav)},
                                       "\n"),
                     tpl);
}

inline std::string tree_question_text(const TaskInstance& t, const Templates& tpl) {
  return tpl.fill("tree." + std::string(to_string(t.tree->relation)),
                  {{"object", t.world.label(t.tree->anchor)}});
}

/// Parent-child statements in traversal order, then the kinship question.
inline PromptBundle render_tree(const TaskInstance& t, SerializationOrder traversal,
                                const Templates& tpl = default_templates()) {
  if (t.kind != TaskKind::tree_kinship || !t.tree) {
    throw render_error("render_tree needs a tree_kinship instance");
  }
  if (traversal != SerializationOrder::tree_dfs && traversal != SerializationOrder::tree_bfs) {
    throw render_error("tree traversal must be tree_dfs or tree_bfs");
  }
  const auto& map = t.world.map();
  std::vector<std::string> parts{tpl.get("tree.intro")};
  for (auto n : tree_statement_order(map, traversal)) {
    parts.push_back(tpl.fill("tree.edge", {{"parent", t.world.label(*map.parent(n))},
                                           {"child", t.world.label(n)}}));
  }
  return make_bundle(t, detail::sentences({detail::sentences(parts), tree_question_text(t, tpl)}, "\n"),
                     tpl);
}

inline PromptBundle render_size(const TaskInstance& t, const Templates& tpl = default_templates()) {
  if (t.kind != TaskKind::size_inference || !t.size) {
    throw render_error("render_size needs a size_inference instance");
  }
  const auto& w = t.world;
  std::vector<std::string> parts;
  if (t.size->with_items) {
    parts.push_back(tpl.fill("size.start_items", {{"object", w.label(t.walk.start)}}));
    for (const auto& s : t.walk.steps) {
      parts.push_back(tpl.fill("size.step_items", {{"direction", detail::dir(s.direction)},
                                                   {"object", w.label(s.node)}}));
    }
  } else {
    parts.push_back(tpl.get("size.start_plain"));
    for (const auto& s : t.walk.steps) {
      parts.push_back(tpl.fill("size.step_plain", {{"direction", detail::dir(s.direction)}}));
    }
  }
  parts.push_back(tpl.get("size.question"));
  return make_bundle(t, detail::sentences(parts), tpl);
}

/// Zero-shot rendering chosen by the instance kind and order.
inline PromptBundle render_zero_shot(const TaskInstance& t, const Templates& tpl = default_templates()) {
  switch (t.kind) {
    case TaskKind::loop_closure_local: return render_local(t, tpl);
    case TaskKind::path_global: return render_global(t, t.order, tpl);
    case TaskKind::tree_kinship: return render_tree(t, t.order, tpl);
    case TaskKind::size_inference: return render_size(t, tpl);
  }
  throw render_error("unknown task kind");
}

// ---------------------------------------------------------------------------
// Canonical mention sequence

/// Object names in the order the zero-shot question mentions them.
inline std::vector<std::string> mention_sequence(const TaskInstance& t) {
  const auto& w = t.world;
  std::vector<std::string> out;
  switch (t.kind) {
    case TaskKind::loop_closure_local:
      out.push_back(w.label(t.walk.start));
      for (std::size_t i = 0; i + 1 < t.walk.steps.size(); ++i) out.push_back(w.label(t.walk.steps[i].node));
      break;
    case TaskKind::size_inference:
      if (t.size && t.size->with_items) {
        for (auto n : t.walk.path()) out.push_back(w.label(n));
      }
      break;
    case TaskKind::path_global: {
      const auto& rows = w.map().layout_rows();
      switch (t.order) {
        case SerializationOrder::random:
          for (auto n : random_listing_order(t)) out.push_back(w.label(n));
          break;
        case SerializationOrder::snake:
        case SerializationOrder::snake_coord:
          for (std::size_t r = 0; r < rows.size(); ++r) {
            auto row = rows[r];
            if (r % 2 == 1) std::reverse(row.begin(), row.end());
            for (auto n : row) out.push_back(w.label(n));
          }
          break;
        default:
          for (const auto& row : rows) {
            for (auto n : row) out.push_back(w.label(n));
          }
      }
      out.push_back(w.label(t.walk.start));
      break;
    }
    case TaskKind::tree_kinship:
      for (auto n : tree_statement_order(w.map(), t.order)) {
        out.push_back(w.label(*w.map().parent(n)));
        out.push_back(w.label(n));
      }
      out.push_back(w.label(t.tree->anchor));
      break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Chain of thought

inline std::string answer_text(const TaskInstance& t) {
  std::string out;
  for (const auto& a : t.ground_truth) {
    if (!out.empty()) out += ", ";
    out += a;
  }
  return out;
}

/// Step-by-step solution produced by replaying the instance, one sentence
/// per step.
inline std::string explanation(const TaskInstance& t, const Templates& tpl = default_templates()) {
  const auto& w = t.world;
  const auto& map = w.map();
  std::vector<std::string> parts;
  switch (t.kind) {
    case TaskKind::loop_closure_local:
    case TaskKind::path_global: {
      parts.push_back(tpl.fill("cot.start", {{"object", w.label(t.walk.start)}}));
      for (std::size_t i = 0; i < t.walk.steps.size(); ++i) {
        const auto& s = t.walk.steps[i];
        const bool closing = t.kind == TaskKind::loop_closure_local && i + 1 == t.walk.steps.size();
        parts.push_back(tpl.fill(closing ? "cot.return" : "cot.step",
                                 {{"direction", detail::dir(s.direction)}, {"object", w.label(s.node)}}));
      }
      break;
    }
    case TaskKind::tree_kinship: {
      const auto rel = t.tree->relation;
      const int ups = rel == TreeRelation::great_great_grandparent ? 4
                      : rel == TreeRelation::cousin                ? 2
                                                                   : 0;
      NodeId at = t.tree->anchor;
      for (int i = 0; i < ups; ++i) {
        const auto p = *map.parent(at);
        parts.push_back(tpl.fill("cot.tree_up", {{"child", w.label(at)}, {"parent", w.label(p)}}));
        at = p;
      }
      const int downs = rel == TreeRelation::great_great_grandchildren ? 4
                        : rel == TreeRelation::cousin                  ? 2
                                                                       : 0;
      std::vector<NodeId> level{at};
      for (int g = 0; g < downs; ++g) {
        std::vector<NodeId> next;
        for (auto x : level) {
          auto kids = map.children(x);
          if (rel == TreeRelation::cousin && g == 0) {
            const auto parent = map.parent(t.tree->anchor);
            kids.erase(std::remove(kids.begin(), kids.end(), *parent), kids.end());
          }
          if (kids.empty()) continue;
          parts.push_back(tpl.fill("cot.tree_down", {{"parent", w.label(x)},
                                                     {"items", join_items(labels_of(w, kids))}}));
          next.insert(next.end(), kids.begin(), kids.end());
        }
        level = std::move(next);
      }
      parts.push_back(tpl.fill("cot.tree_result", {{"items", join_items(t.ground_truth)}}));
      break;
    }
    case TaskKind::size_inference: {
      const auto downs = std::count_if(t.walk.steps.begin(), t.walk.steps.end(),
                                       [](const Step& s) { return s.direction == Direction::down; });
      parts.push_back(tpl.fill("cot.size", {{"width", std::to_string(t.size->width)},
                                            {"downs", std::to_string(downs)},
                                            {"height", std::to_string(t.size->height)}}));
      break;
    }
  }
  return detail::sentences(parts);
}

/// n worked examples from `pool` (disjoint from the target) followed by the
/// target question. n = 0 gives the zero-shot bundle.
inline PromptBundle assemble_cot(const TaskInstance& target, int shots,
                                 const std::vector<TaskInstance>& pool,
                                 const Templates& tpl = default_templates()) {
  auto bundle = render_zero_shot(target, tpl);
  if (shots < 0) throw render_error("shot count must be >= 0");
  if (shots == 0) return bundle;
  std::vector<const TaskInstance*> usable;
  for (const auto& p : pool) {
    if (p.id != target.id) usable.push_back(&p);
  }
  if (usable.size() < static_cast<std::size_t>(shots)) {
    throw render_error("shot pool has " + std::to_string(usable.size()) + " usable instances, need " +
                       std::to_string(shots));
  }
  std::string user;
  for (int i = 0; i < shots; ++i) {
    const auto& ex = *usable[i];
    Shot shot{render_zero_shot(ex, tpl).question, explanation(ex, tpl), answer_text(ex)};
    user += tpl.fill("cot.block", {{"question", shot.question},
                                   {"explanation", shot.explanation},
                                   {"answer", shot.answer}});
    user += "\n\n";
    bundle.shots.push_back(std::move(shot));
  }
  user += tpl.fill("cot.target", {{"question", bundle.question}});
  bundle.system_prompt = tpl.get("system.cot");
  bundle.user_prompt = std::move(user);
  bundle.flags.cot_shots = shots;
  return bundle;
}

/// `count` rendered instances from one request. Instance i uses child seed
/// ("instance", i); CoT shots come from a disjoint pool seeded by ("shots", j).
inline std::vector<TaskInstance> build_dataset(const GenerationRequest& req, int count,
                                               const ObjectVocabulary& vocab, std::uint64_t seed,
                                               const Templates& tpl = default_templates()) {
  if (count < 0) throw Error(ErrorCode::usage, "count must be >= 0");
  req.validate();
  const auto prefix = req.topology.tag() + "-" + std::string(to_string(req.kind));
  std::vector<TaskInstance> pool;
  for (int j = 0; j < req.flags.cot_shots; ++j) {
    pool.push_back(generate_instance(req, vocab, derive_seed(seed, "shots", static_cast<std::uint64_t>(j)),
                                     prefix + "-shot-" + std::to_string(j)));
  }
  std::vector<TaskInstance> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    auto t = generate_instance(req, vocab, derive_seed(seed, "instance", static_cast<std::uint64_t>(i)),
                               prefix + "-" + std::to_string(i));
    t.prompt = assemble_cot(t, req.flags.cot_shots, pool, tpl);
    out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

struct ParsedMove {
  Direction direction;
  std::optional<std::string> object;
  friend bool operator==(const ParsedMove&, const ParsedMove&) = default;
};

struct MapEntry {
  std::string label;
  int row = 0;     // 1-based; ring listings use row 1
  int column = 0;  // 1-based position within the row
  friend bool operator==(const MapEntry&, const MapEntry&) = default;
};

struct ParsedPrompt {
  bool preamble = false;
  std::optional<std::string> start;
  std::vector<ParsedMove> moves;
  std::vector<MapEntry> map;
  std::vector<std::pair<std::string, std::string>> tree_edges;
  std::optional<TreeRelation> relation;
  std::optional<std::string> anchor;
  bool size_question = false;
  std::vector<std::string> mentions;
};

namespace detail {

struct CompiledTemplate {
  std::string key;
  std::vector<std::string> slots;
  std::regex pattern;
};

inline std::string slot_pattern(std::string_view slot) {
  if (slot == "direction") {
    std::vector<std::string> names;
    for (auto d : kAllDirections) names.emplace_back(to_string(d));
    std::sort(names.begin(), names.end(),
              [](const auto& a, const auto& b) { return a.size() > b.size(); });
    std::string alt;
    for (const auto& n : names) alt += (alt.empty() ? "" : "|") + n;
    return "(" + alt + ")";
  }
  if (slot == "row" || slot == "column" || slot == "count") return "(\\d+)";
  if (slot == "ordinal" || slot == "from_side" || slot == "to_side") return "([a-z0-9]+)";
  return "(.+?)";
}

inline CompiledTemplate compile(const Templates& tpl, const std::string& key) {
  static constexpr std::string_view kSpecial = "\\^$.|?*+()[]{}/";
  const auto& text = tpl.get(key);
  CompiledTemplate c{key, {}, {}};
  std::string re;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '{') {
      const auto close = text.find('}', i);
      const auto slot = text.substr(i + 1, close - i - 1);
      c.slots.push_back(slot);
      re += slot_pattern(slot);
      i = close;
    } else if (text[i] == '\n') {
      re += "\\n";
    } else {
      if (kSpecial.find(text[i]) != std::string_view::npos) re += '\\';
      re += text[i];
    }
  }
  re += "(?=\\s|$)";
  c.pattern = std::regex(re, std::regex::ECMAScript);
  return c;
}

/// Candidate sentence templates in matching priority (specific first).
inline const std::vector<std::string>& parse_keys() {
  static const std::vector<std::string> keys = {
      "preamble.hexagon",   "preamble.triangle", "global.intro",     "tree.intro",
      "local.start",        "size.start_plain",  "global.start",     "local.step",
      "size.step_plain",    "local.final",       "global.step",      "map.row_major",
      "map.snake",          "map.snake_transition", "map.random",    "map.ring",
      "tree.edge",          "tree.cousin",       "tree.great_great_grandparent",
      "tree.great_great_grandchildren",          "size.question"};
  return keys;
}

inline std::vector<MapEntry> parse_coord_items(std::string_view items) {
  // Coordinate items embed ", " so they are consumed one at a time.
  static const std::regex one("^(.+?) \\(row (\\d+), column (\\d+)\\)");
  static const std::regex sep("^(?:, and |, | and )");
  std::vector<MapEntry> out;
  std::string rest(items);
  while (!rest.empty()) {
    std::smatch m;
    if (!std::regex_search(rest, m, one)) throw format_error("malformed coordinate item in '" + rest + "'");
    out.push_back({m[1].str(), std::stoi(m[2].str()), std::stoi(m[3].str())});
    rest.erase(0, m.length(0));
    std::smatch s;
    if (std::regex_search(rest, s, sep)) rest.erase(0, s.length(0));
  }
  return out;
}

}  // namespace detail

/// Recovers structure and mention order from a zero-shot question produced
/// by the render functions with the same templates.
inline ParsedPrompt parse_question(std::string_view text, const Templates& tpl = default_templates()) {
  std::vector<detail::CompiledTemplate> compiled;
  for (const auto& key : detail::parse_keys()) compiled.push_back(detail::compile(tpl, key));
  ParsedPrompt out;
  const std::string s(text);
  auto it = s.cbegin();
  int snake_row = 0;
  while (true) {
    while (it != s.cend() && std::isspace(static_cast<unsigned char>(*it))) ++it;
    if (it == s.cend()) break;
    std::smatch m;
    const detail::CompiledTemplate* hit = nullptr;
    for (const auto& c : compiled) {
      if (std::regex_search(it, s.cend(), m, c.pattern, std::regex_constants::match_continuous)) {
        hit = &c;
        break;
      }
    }
    if (!hit) {
      throw format_error("unparseable prompt text at: '" + std::string(it, std::min(it + 60, s.cend())) + "'");
    }
    const auto slot = [&](std::string_view name) -> std::string {
      for (std::size_t i = 0; i < hit->slots.size(); ++i) {
        if (hit->slots[i] == name) return m[i + 1].str();
      }
      throw format_error("template " + hit->key + " has no slot " + std::string(name));
    };
    const auto& key = hit->key;
    if (key.rfind("preamble.", 0) == 0) {
      out.preamble = true;
    } else if (key == "local.start" || key == "global.start") {
      out.start = slot("object");
      out.mentions.push_back(*out.start);
    } else if (key == "size.start_plain") {
      out.start = std::string();
    } else if (key == "local.step") {
      out.moves.push_back({*parse_direction(slot("direction")), slot("object")});
      out.mentions.push_back(slot("object"));
    } else if (key == "size.step_plain" || key == "global.step" || key == "local.final") {
      out.moves.push_back({*parse_direction(slot("direction")), std::nullopt});
    } else if (key == "map.row_major") {
      const int row = parse_ordinal(slot("ordinal"));
      int col = 0;
      for (auto& label : split_items(slot("items"))) {
        out.mentions.push_back(label);
        out.map.push_back({std::move(label), row, ++col});
      }
    } else if (key == "map.snake") {
      const int row = parse_ordinal(slot("ordinal"));
      snake_row = row;
      const bool reverse = slot("from_side") == "right";
      const auto items = slot("items");
      std::vector<MapEntry> entries;
      if (items.find(" (row ") != std::string::npos) {
        entries = detail::parse_coord_items(items);
      } else {
        for (auto& label : split_items(items)) entries.push_back({std::move(label), row, 0});
      }
      const int n = static_cast<int>(entries.size());
      for (int i = 0; i < n; ++i) {
        if (entries[i].column == 0) entries[i].column = reverse ? n - i : i + 1;
        out.mentions.push_back(entries[i].label);
        out.map.push_back(entries[i]);
      }
    } else if (key == "map.snake_transition") {
      if (snake_row == 0) throw format_error("snake transition before the first row");
    } else if (key == "map.random") {
      out.mentions.push_back(slot("object"));
      out.map.push_back({slot("object"), std::stoi(slot("row")), std::stoi(slot("column"))});
    } else if (key == "map.ring") {
      int col = 0;
      for (auto& label : split_items(slot("items"))) {
        out.mentions.push_back(label);
        out.map.push_back({std::move(label), 1, ++col});
      }
    } else if (key == "tree.edge") {
      out.tree_edges.emplace_back(slot("parent"), slot("child"));
      out.mentions.push_back(slot("parent"));
      out.mentions.push_back(slot("child"));
    } else if (key.rfind("tree.", 0) == 0 && key != "tree.intro") {
      out.relation = parse_relation(key.substr(5));
      out.anchor = slot("object");
      out.mentions.push_back(*out.anchor);
    } else if (key == "size.question") {
      out.size_question = true;
    }
    it += m.length(0);
  }
  return out;
}

}  // namespace spatialnav

#pragma once

// Distances between a ground-truth answer and a predicted label.
// std::nullopt means the prediction is off the map: the label is never
// mentioned in the instance's prompt.

#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spatialnav/errors.hpp"
#include "spatialnav/instance.hpp"
#include "spatialnav/render.hpp"
#include "spatialnav/topology.hpp"

namespace spatialnav {

inline std::optional<std::size_t> first_mention(const std::vector<std::string>& mentions,
                                                std::string_view label) {
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    if (mentions[i] == label) return i;
  }
  return std::nullopt;
}

inline NodeId truth_node(const TaskInstance& t) {
  if (t.ground_truth.empty()) throw analysis_error("instance " + t.id + " has no ground truth");
  const auto n = t.world.find(t.ground_truth.front());
  if (!n) throw analysis_error("ground truth of " + t.id + " is not a map label");
  return *n;
}

/// Graph distance between the ground-truth node and the predicted label's node.
inline std::optional<int> spatial_distance(const TaskInstance& t, std::string_view predicted,
                                           const std::vector<std::string>& mentions) {
  if (!first_mention(mentions, predicted)) return std::nullopt;
  const auto p = t.world.find(predicted);
  if (!p) return std::nullopt;
  return shortest_distance(t.world.map(), truth_node(t), *p);
}

inline std::optional<int> spatial_distance(const TaskInstance& t, std::string_view predicted) {
  return spatial_distance(t, predicted, mention_sequence(t));
}

/// |first mention of predicted - first mention of ground truth|.
inline std::optional<int> temporal_distance(const std::vector<std::string>& mentions,
                                            std::string_view truth, std::string_view predicted) {
  const auto a = first_mention(mentions, truth);
  const auto b = first_mention(mentions, predicted);
  if (!a || !b) return std::nullopt;
  return static_cast<int>(*a > *b ? *a - *b : *b - *a);
}

inline std::optional<int> temporal_distance(const TaskInstance& t, std::string_view predicted) {
  if (t.ground_truth.empty()) throw analysis_error("instance " + t.id + " has no ground truth");
  return temporal_distance(mention_sequence(t), t.ground_truth.front(), predicted);
}

struct AxisDistance {
  int rows = 0;
  int cols = 0;
  friend bool operator==(const AxisDistance&, const AxisDistance&) = default;
};

/// Row and column index differences on a square grid.
inline std::optional<AxisDistance> axis_distance(const TaskInstance& t, std::string_view predicted) {
  const auto& desc = t.world.map().descriptor();
  if (desc.kind != TopologyKind::square) {
    throw analysis_error("axis distance needs a square grid, got " + desc.tag());
  }
  const auto mentions = mention_sequence(t);
  if (!first_mention(mentions, predicted)) return std::nullopt;
  const auto p = t.world.find(predicted);
  if (!p) return std::nullopt;
  const auto g = truth_node(t);
  const int cols = desc.cols;
  return AxisDistance{std::abs(static_cast<int>(*p) / cols - static_cast<int>(g) / cols),
                      std::abs(static_cast<int>(*p) % cols - static_cast<int>(g) % cols)};
}

}  // namespace spatialnav

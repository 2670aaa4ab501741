#pragma once

// Error-distance analysis over evaluation records, Monte-Carlo baselines and
// plot-ready CSV tables.

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "spatialnav/errors.hpp"
#include "spatialnav/harness.hpp"
#include "spatialnav/instance.hpp"
#include "spatialnav/metrics.hpp"
#include "spatialnav/random.hpp"

namespace spatialnav {

enum class DistanceKind { spatial, temporal };

constexpr std::string_view to_string(DistanceKind k) noexcept {
  return k == DistanceKind::spatial ? "spatial" : "temporal";
}

inline std::optional<DistanceKind> parse_distance_kind(std::string_view s) {
  if (s == "spatial") return DistanceKind::spatial;
  if (s == "temporal") return DistanceKind::temporal;
  return std::nullopt;
}

using Histogram = std::map<int, std::size_t>;

inline std::size_t total(const Histogram& h) {
  std::size_t n = 0;
  for (const auto& [_, c] : h) n += c;
  return n;
}

/// Total-variation distance between two histograms viewed as distributions.
inline double total_variation(const Histogram& a, const Histogram& b) {
  const double na = static_cast<double>(total(a)), nb = static_cast<double>(total(b));
  if (na == 0 || nb == 0) throw analysis_error("total variation of an empty histogram");
  std::map<int, std::pair<double, double>> both;
  for (const auto& [d, c] : a) both[d].first = static_cast<double>(c) / na;
  for (const auto& [d, c] : b) both[d].second = static_cast<double>(c) / nb;
  double tv = 0;
  for (const auto& [_, p] : both) tv += std::abs(p.first - p.second);
  return tv / 2;
}

// ---------------------------------------------------------------------------
// Error records

struct ErrorRecord {
  std::string instance_id;
  int run = 0;
  std::string predicted;
  std::optional<int> spatial;   // nullopt when off map or excluded
  std::optional<int> temporal;  // nullopt when off map
  std::optional<AxisDistance> axis;  // square maps only
  bool off_map = false;
  bool spatial_excluded = false;  // global ring
  bool predicted_is_start = false;
  Setting setting = Setting::local;
  TopologyKind topology = TopologyKind::square;
};

struct ErrorSet {
  std::vector<ErrorRecord> errors;
  std::size_t wrong = 0;        // wrong records considered
  std::size_t no_answer = 0;    // wrong records with an empty extracted set
  std::size_t off_map = 0;      // error entries whose label is not in the prompt
  std::size_t skipped = 0;      // records of kinds without a walk (trees, size inference)
};

/// One ErrorRecord per wrongly predicted label of every wrong walk record.
inline ErrorSet build_error_records(const std::vector<TaskInstance>& instances,
                                    const std::vector<EvalRecord>& records) {
  std::unordered_map<std::string, const TaskInstance*> by_id;
  for (const auto& t : instances) by_id.emplace(t.id, &t);
  ErrorSet out;
  for (const auto& r : records) {
    if (r.correct) continue;
    const auto it = by_id.find(r.instance_id);
    if (it == by_id.end()) throw analysis_error("record refers to unknown instance " + r.instance_id);
    const auto& t = *it->second;
    if (t.kind != TaskKind::loop_closure_local && t.kind != TaskKind::path_global) {
      ++out.skipped;
      continue;
    }
    ++out.wrong;
    if (r.extracted.empty()) {
      ++out.no_answer;
      continue;
    }
    const auto mentions = mention_sequence(t);
    const auto& truth = t.ground_truth.front();
    const bool ring_global = t.setting() == Setting::global && t.topology() == TopologyKind::ring;
    for (const auto& label : r.extracted) {
      if (label == truth) continue;
      ErrorRecord e;
      e.instance_id = t.id;
      e.run = r.run;
      e.predicted = label;
      e.setting = t.setting();
      e.topology = t.topology();
      e.temporal = temporal_distance(mentions, truth, label);
      e.off_map = !e.temporal.has_value();
      e.spatial_excluded = ring_global;
      if (!e.off_map && !ring_global) e.spatial = spatial_distance(t, label, mentions);
      if (!e.off_map && t.topology() == TopologyKind::square) e.axis = axis_distance(t, label);
      e.predicted_is_start = label == t.world.label(t.walk.start);
      if (e.off_map) ++out.off_map;
      out.errors.push_back(std::move(e));
    }
  }
  return out;
}

inline Histogram histogram(const std::vector<ErrorRecord>& errors, DistanceKind kind) {
  Histogram h;
  for (const auto& e : errors) {
    const auto& d = kind == DistanceKind::spatial ? e.spatial : e.temporal;
    if (d) ++h[*d];
  }
  return h;
}

/// Temporal distances of errors whose spatial distance equals sd.
inline Histogram conditional_td(const std::vector<ErrorRecord>& errors, int sd) {
  Histogram h;
  for (const auto& e : errors) {
    if (e.spatial == sd && e.temporal) ++h[*e.temporal];
  }
  return h;
}

struct AxisHistograms {
  Histogram rows;
  Histogram cols;
};

inline AxisHistograms axis_histograms(const std::vector<ErrorRecord>& errors) {
  AxisHistograms h;
  for (const auto& e : errors) {
    if (!e.axis) continue;
    ++h.rows[e.axis->rows];
    ++h.cols[e.axis->cols];
  }
  return h;
}

/// Fraction of errors at temporal distance td that name the start object.
inline std::optional<double> start_bias_rate(const std::vector<ErrorRecord>& errors, int td) {
  std::size_t n = 0, start = 0;
  for (const auto& e : errors) {
    if (e.temporal != td) continue;
    ++n;
    if (e.predicted_is_start) ++start;
  }
  if (n == 0) return std::nullopt;
  return static_cast<double>(start) / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Baselines

struct BaselineDistribution {
  Histogram histogram;
  std::size_t samples = 0;
  Setting setting = Setting::local;
  DistanceKind kind = DistanceKind::spatial;
};

/// Nodes a uniform guesser chooses from: distinct visited nodes (local) or
/// every node (global).
inline std::vector<NodeId> baseline_candidates(const TaskInstance& t, Setting setting) {
  if (setting == Setting::global) {
    std::vector<NodeId> all(t.world.map().node_count());
    for (NodeId i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }
  std::vector<NodeId> out;
  std::vector<bool> seen(t.world.map().node_count(), false);
  for (auto n : t.walk.path()) {
    if (!seen[n]) {
      seen[n] = true;
      out.push_back(n);
    }
  }
  return out;
}

inline std::optional<int> candidate_distance(const TaskInstance& t, NodeId guess, DistanceKind kind,
                                             const std::vector<std::string>& mentions) {
  if (kind == DistanceKind::spatial) return shortest_distance(t.world.map(), truth_node(t), guess);
  return temporal_distance(mentions, t.ground_truth.front(), t.world.label(guess));
}

/// Monte-Carlo distribution of distances under uniform guessing: a uniform
/// instance, then a uniform candidate node. Distance 0 is kept.
inline BaselineDistribution baseline(const std::vector<TaskInstance>& instances, Setting setting,
                                     DistanceKind kind, std::size_t samples, std::uint64_t seed) {
  if (instances.empty()) throw analysis_error("baseline needs at least one instance");
  struct Prepared {
    std::vector<NodeId> candidates;
    std::vector<int> distance;
  };
  std::vector<Prepared> prep;
  prep.reserve(instances.size());
  for (const auto& t : instances) {
    if (t.kind != TaskKind::loop_closure_local && t.kind != TaskKind::path_global) {
      throw analysis_error("baseline needs walk instances, got " + std::string(to_string(t.kind)));
    }
    Prepared p;
    p.candidates = baseline_candidates(t, setting);
    const auto mentions = mention_sequence(t);
    for (auto n : p.candidates) {
      const auto d = candidate_distance(t, n, kind, mentions);
      if (!d) throw analysis_error("candidate node of " + t.id + " is never mentioned");
      p.distance.push_back(*d);
    }
    prep.push_back(std::move(p));
  }
  BaselineDistribution out;
  out.setting = setting;
  out.kind = kind;
  out.samples = samples;
  Rng rng(seed);
  for (std::size_t s = 0; s < samples; ++s) {
    const auto& p = prep[rng.below(prep.size())];
    ++out.histogram[p.distance[rng.below(p.candidates.size())]];
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

}  // namespace detail

inline void write_histogram_csv(std::ostream& os, const Histogram& h, std::string_view label = "distance") {
  const double n = static_cast<double>(total(h));
  os << label << ",count,fraction\n";
  for (const auto& [d, c] : h) {
    os << d << ',' << c << ',' << detail::num(n > 0 ? static_cast<double>(c) / n : 0.0) << '\n';
  }
}

inline void write_error_records_csv(std::ostream& os, const std::vector<ErrorRecord>& errors) {
  os << "instance_id,run,predicted,setting,topology,spatial_distance,temporal_distance,row_delta,"
        "col_delta,off_map,predicted_is_start\n";
  const auto opt = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); };
  for (const auto& e : errors) {
    os << e.instance_id << ',' << e.run << ',' << e.predicted << ',' << to_string(e.setting) << ','
       << to_string(e.topology) << ',' << opt(e.spatial) << ',' << opt(e.temporal) << ','
       << (e.axis ? std::to_string(e.axis->rows) : "") << ',' << (e.axis ? std::to_string(e.axis->cols) : "")
       << ',' << (e.off_map ? 1 : 0) << ',' << (e.predicted_is_start ? 1 : 0) << '\n';
  }
}

inline void write_score_csv(std::ostream& os, const std::vector<ScoreRow>& rows,
                            const std::vector<std::string>& keys) {
  for (const auto& k : keys) os << k << ',';
  os << "n,runs,accuracy,se,ci95_low,ci95_high\n";
  for (const auto& r : rows) {
    for (const auto& g : r.group) os << g << ',';
    os << r.n << ',' << r.run_means.size() << ',' << detail::num(r.mean) << ',' << detail::num(r.se) << ','
       << detail::num(r.mean - r.ci95()) << ',' << detail::num(r.mean + r.ci95()) << '\n';
  }
}

}  // namespace spatialnav

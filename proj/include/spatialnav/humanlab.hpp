#pragma once

// Human-baseline experiment: question pool, sessions persisted to an
// append-only event log, and scoring under the exclusion criteria.

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "spatialnav/errors.hpp"
#include "spatialnav/random.hpp"
#include "spatialnav/render.hpp"
#include "spatialnav/taskgen.hpp"

namespace spatialnav {

inline constexpr std::array<std::string_view, 4> kHumanStructures = {"square", "ring", "hexagon", "triangle"};
inline constexpr int kRegularPerStructure = 20;
inline constexpr int kRegularPerSession = 10;
inline constexpr double kSessionBudgetSeconds = 30 * 60;

// ---------------------------------------------------------------------------
// Pool

struct PoolQuestion {
  std::string id;
  std::string structure;
  bool attention = false;
  std::string prompt;
  std::vector<std::string> answers;
};

struct QuestionPool {
  std::vector<PoolQuestion> regular;
  std::vector<PoolQuestion> attention;

  const PoolQuestion* find(std::string_view id) const {
    for (const auto* list : {&regular, &attention}) {
      for (const auto& q : *list) {
        if (q.id == id) return &q;
      }
    }
    return nullptr;
  }

  /// Throws format_error unless there are exactly 20 regular questions and
  /// at least one attention check per structure, with unique ids.
  void validate() const {
    std::map<std::string, int> reg, att;
    std::set<std::string> ids;
    for (const auto& q : regular) {
      if (q.attention) throw format_error("regular question " + q.id + " is flagged as an attention check");
      ++reg[q.structure];
      if (!ids.insert(q.id).second) throw format_error("duplicate pool question id " + q.id);
      if (q.answers.empty()) throw format_error("pool question " + q.id + " has no answer");
    }
    for (const auto& q : attention) {
      if (!q.attention) throw format_error("attention question " + q.id + " is not flagged");
      ++att[q.structure];
      if (!ids.insert(q.id).second) throw format_error("duplicate pool question id " + q.id);
      if (q.answers.empty()) throw format_error("pool question " + q.id + " has no answer");
    }
    for (auto s : kHumanStructures) {
      const std::string key(s);
      if (reg[key] != kRegularPerStructure) {
        throw format_error("pool needs " + std::to_string(kRegularPerStructure) + " regular " + key +
                           " questions, has " + std::to_string(reg[key]));
      }
      if (att[key] < 1) throw format_error("pool has no " + key + " attention check");
    }
    if (reg.size() != kHumanStructures.size() || att.size() != kHumanStructures.size()) {
      throw format_error("pool contains an unknown structure");
    }
  }
};

inline nlohmann::json to_json(const PoolQuestion& q) {
  return {{"id", q.id}, {"structure", q.structure}, {"attention", q.attention}, {"prompt", q.prompt},
          {"answers", q.answers}};
}

inline nlohmann::json to_json(const QuestionPool& p) {
  nlohmann::json reg = nlohmann::json::array(), att = nlohmann::json::array();
  for (const auto& q : p.regular) reg.push_back(to_json(q));
  for (const auto& q : p.attention) att.push_back(to_json(q));
  return {{"version", 1}, {"regular", reg}, {"attention", att}};
}

inline QuestionPool pool_from_json(const nlohmann::json& j) {
  QuestionPool p;
  try {
    if (j.at("version").get<int>() != 1) throw format_error("unsupported pool version");
    const auto read = [](const nlohmann::json& q) {
      return PoolQuestion{q.at("id").get<std::string>(), q.at("structure").get<std::string>(),
                          q.at("attention").get<bool>(), q.at("prompt").get<std::string>(),
                          q.at("answers").get<std::vector<std::string>>()};
    };
    for (const auto& q : j.at("regular")) p.regular.push_back(read(q));
    for (const auto& q : j.at("attention")) p.attention.push_back(read(q));
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("malformed pool: ") + e.what());
  }
  p.validate();
  return p;
}

inline QuestionPool load_pool(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open pool " + path);
  try {
    return pool_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw format_error("pool " + path + " is not JSON: " + e.what());
  }
}

inline TopologyDescriptor human_regular_topology(std::string_view s) {
  if (s == "square") return TopologyDescriptor::square(3, 3);
  if (s == "ring") return TopologyDescriptor::ring(12);
  if (s == "hexagon") return TopologyDescriptor::hexagon(2);
  return TopologyDescriptor::triangle(3);
}

/// Walk length for regular questions; a ring only closes after a full loop.
inline int human_regular_steps(std::string_view s) { return s == "ring" ? 12 : 8; }

/// Attention checks walk once around the smallest cycle of a tiny map.
inline std::pair<TopologyDescriptor, int> human_attention_topology(std::string_view s) {
  if (s == "square") return {TopologyDescriptor::square(2, 2), 4};
  if (s == "ring") return {TopologyDescriptor::ring(5), 5};
  if (s == "hexagon") return {TopologyDescriptor::hexagon(1), 6};
  return {TopologyDescriptor::triangle(2), 3};
}

/// 20 local loop-closure questions per structure plus `attention_per_structure`
/// attention checks per structure.
inline QuestionPool build_pool(const ObjectVocabulary& vocab, std::uint64_t seed, int attention_per_structure = 5) {
  QuestionPool pool;
  const auto make = [&](const TopologyDescriptor& desc, int steps, std::uint64_t s, std::string id,
                        std::string structure, bool attention) {
    GenerationRequest req;
    req.topology = desc;
    req.kind = TaskKind::loop_closure_local;
    req.steps = steps;
    const auto t = generate_instance(req, vocab, s, id);
    return PoolQuestion{std::move(id), std::move(structure), attention, render_local(t).question, t.ground_truth};
  };
  for (auto s : kHumanStructures) {
    const std::string name(s);
    for (int i = 0; i < kRegularPerStructure; ++i) {
      char id[32];
      std::snprintf(id, sizeof id, "%s-%02d", name.c_str(), i);
      pool.regular.push_back(make(human_regular_topology(s), human_regular_steps(s),
                                  derive_seed(seed, "pool-" + name, static_cast<std::uint64_t>(i)), id, name, false));
    }
    const auto [desc, k] = human_attention_topology(s);
    for (int i = 0; i < attention_per_structure; ++i) {
      pool.attention.push_back(make(desc, k, derive_seed(seed, "attention-" + name, static_cast<std::uint64_t>(i)),
                                    "check-" + name + "-" + std::to_string(i), name, true));
    }
  }
  pool.validate();
  return pool;
}

// ---------------------------------------------------------------------------
// Normalisation

/// Lowercase, split on whitespace, drop the standalone articles a/an/the,
/// rejoin with single spaces.
inline std::string normalize_response(std::string_view text) {
  std::string lowered(text);
  for (auto& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  std::istringstream in(lowered);
  std::string token, out;
  while (in >> token) {
    if (token == "a" || token == "an" || token == "the") continue;
    if (!out.empty()) out += ' ';
    out += token;
  }
  return out;
}

inline bool response_correct(std::string_view answer, const std::vector<std::string>& truth) {
  const auto a = normalize_response(answer);
  return std::any_of(truth.begin(), truth.end(), [&](const auto& t) { return normalize_response(t) == a; });
}

// ---------------------------------------------------------------------------
// Sessions

struct PlanItem {
  std::string question_id;
  std::string structure;
  bool attention = false;
};

struct SessionPlan {
  std::string session_id;
  std::uint64_t seed = 0;
  double created_at = 0;  // seconds since the epoch, server clock
  double budget_seconds = kSessionBudgetSeconds;
  std::vector<PlanItem> questions;
};

/// 10 regular questions without replacement, one attention check per
/// structure, shuffled together.
inline SessionPlan create_session(const QuestionPool& pool, std::uint64_t seed, double now) {
  pool.validate();
  Rng rng(seed);
  std::vector<const PoolQuestion*> regular;
  for (const auto& q : pool.regular) regular.push_back(&q);
  rng.shuffle(regular);
  regular.resize(kRegularPerSession);
  std::vector<const PoolQuestion*> chosen = regular;
  for (auto s : kHumanStructures) {
    std::vector<const PoolQuestion*> checks;
    for (const auto& q : pool.attention) {
      if (q.structure == s) checks.push_back(&q);
    }
    chosen.push_back(rng.pick(checks));
  }
  rng.shuffle(chosen);
  SessionPlan plan;
  char id[24];
  std::snprintf(id, sizeof id, "s%016llx", static_cast<unsigned long long>(derive_seed(seed, "session-id")));
  plan.session_id = id;
  plan.seed = seed;
  plan.created_at = now;
  for (const auto* q : chosen) plan.questions.push_back({q->id, q->structure, q->attention});
  return plan;
}

struct ResponseRecord {
  std::string record_id;
  std::string session_id;
  std::string question_id;
  std::string structure;
  std::string answer;
  std::string normalized;
  double elapsed_seconds = 0;
  double submitted_at = 0;
  bool attention = false;
  bool correct = false;
};

enum class SessionFailure { unknown_session, unknown_question, expired, duplicate, out_of_order, invalid };

class SessionError : public Error {
 public:
  SessionError(SessionFailure f, const std::string& m) : Error(ErrorCode::session, m), failure_(f) {}
  SessionFailure failure() const noexcept { return failure_; }

 private:
  SessionFailure failure_;
};

struct SessionState {
  SessionPlan plan;
  std::vector<ResponseRecord> responses;  // in plan order

  bool complete() const { return responses.size() == plan.questions.size(); }
};

using Clock = std::function<double()>;

inline double system_seconds() {
  return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
}

/// Event-log file opened for appending; every event is fsynced.
class EventLog {
 public:
  explicit EventLog(std::string path) : path_(std::move(path)) {
    fd_ = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw io_error("cannot open event log " + path_);
  }
  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;
  ~EventLog() {
    if (fd_ >= 0) ::close(fd_);
  }

  void append(const nlohmann::json& event) {
    const auto line = event.dump() + "\n";
    std::size_t done = 0;
    while (done < line.size()) {
      const auto n = ::write(fd_, line.data() + done, line.size() - done);
      if (n < 0) throw io_error("write to event log " + path_ + " failed");
      done += static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) throw io_error("fsync of event log " + path_ + " failed");
  }

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
  int fd_ = -1;
};

/// Parsed events of a log. A final line without its newline is a torn
/// write and is ignored.
inline std::vector<nlohmann::json> read_event_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::vector<nlohmann::json> out;
  if (!in) return out;
  std::stringstream buf;
  buf << in.rdbuf();
  const auto text = buf.str();
  std::size_t start = 0, lineno = 0;
  while (true) {
    const auto end = text.find('\n', start);
    if (end == std::string::npos) break;
    ++lineno;
    const auto line = text.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw format_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

class SessionStore {
 public:
  SessionStore(QuestionPool pool, std::string log_path, std::uint64_t seed, Clock clock = system_seconds)
      : pool_(std::move(pool)), seed_(seed), clock_(std::move(clock)) {
    pool_.validate();
    for (const auto& e : read_event_log(log_path)) apply(e);
    log_ = std::make_unique<EventLog>(std::move(log_path));
  }

  SessionPlan create() {
    std::lock_guard lock(mu_);
    const auto s = derive_seed(seed_, "session", counter_);
    auto plan = create_session(pool_, s, clock_());
    nlohmann::json ev = {{"event", "session_created"},
                         {"session_id", plan.session_id},
                         {"seed", plan.seed},
                         {"created_at", plan.created_at},
                         {"budget_seconds", plan.budget_seconds},
                         {"questions", nlohmann::json::array()}};
    for (const auto& q : plan.questions) ev["questions"].push_back(q.question_id);
    log_->append(ev);
    apply(ev);
    return plan;
  }

  struct NextQuestion {
    bool done = false;
    std::size_t index = 0;
    std::size_t total = 0;
    std::string question_id;
    std::string prompt;
    double remaining_seconds = 0;
  };

  NextQuestion next(const std::string& session_id) const {
    std::lock_guard lock(mu_);
    const auto& s = get(session_id);
    NextQuestion n;
    n.total = s.plan.questions.size();
    n.index = s.responses.size();
    n.remaining_seconds = std::max(0.0, s.plan.created_at + s.plan.budget_seconds - clock_());
    if (s.complete()) {
      n.done = true;
      return n;
    }
    if (n.remaining_seconds <= 0) throw SessionError(SessionFailure::expired, "session " + session_id + " has expired");
    const auto& item = s.plan.questions[n.index];
    n.question_id = item.question_id;
    n.prompt = pool_.find(item.question_id)->prompt;
    return n;
  }

  ResponseRecord submit(const std::string& session_id, const std::string& question_id, const std::string& answer,
                        double elapsed_seconds) {
    std::lock_guard lock(mu_);
    const auto& s = get(session_id);
    const auto now = clock_();
    const auto pos = std::find_if(s.plan.questions.begin(), s.plan.questions.end(),
                                  [&](const PlanItem& q) { return q.question_id == question_id; });
    if (pos == s.plan.questions.end()) {
      throw SessionError(SessionFailure::unknown_question,
                         "question " + question_id + " is not part of session " + session_id);
    }
    const auto index = static_cast<std::size_t>(pos - s.plan.questions.begin());
    if (index < s.responses.size()) {
      throw SessionError(SessionFailure::duplicate, "question " + question_id + " was already answered");
    }
    if (now >= s.plan.created_at + s.plan.budget_seconds) {
      throw SessionError(SessionFailure::expired, "session " + session_id + " has expired");
    }
    if (index != s.responses.size()) {
      throw SessionError(SessionFailure::out_of_order, "question " + question_id + " is not the next question");
    }
    if (!(elapsed_seconds >= 0)) throw SessionError(SessionFailure::invalid, "elapsed_seconds must be >= 0");
    const nlohmann::json ev = {{"event", "answer"},
                               {"record_id", session_id + "-" + std::to_string(index)},
                               {"session_id", session_id},
                               {"question_id", question_id},
                               {"answer", answer},
                               {"elapsed_seconds", elapsed_seconds},
                               {"submitted_at", now}};
    log_->append(ev);
    apply(ev);
    return sessions_.at(session_id).responses.back();
  }

  /// Copy of every session, consistent with the log at the time of the call.
  std::vector<SessionState> snapshot() const {
    std::lock_guard lock(mu_);
    std::vector<SessionState> out;
    for (const auto& id : order_) out.push_back(sessions_.at(id));
    return out;
  }

  const QuestionPool& pool() const noexcept { return pool_; }

 private:
  const SessionState& get(const std::string& id) const {
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw SessionError(SessionFailure::unknown_session, "unknown session " + id);
    return it->second;
  }

  void apply(const nlohmann::json& e) {
    try {
      const auto kind = e.at("event").get<std::string>();
      if (kind == "session_created") {
        SessionPlan plan;
        plan.session_id = e.at("session_id").get<std::string>();
        plan.seed = e.at("seed").get<std::uint64_t>();
        plan.created_at = e.at("created_at").get<double>();
        plan.budget_seconds = e.at("budget_seconds").get<double>();
        for (const auto& qid : e.at("questions")) {
          const auto* q = pool_.find(qid.get<std::string>());
          if (!q) throw format_error("event log names unknown question " + qid.get<std::string>());
          plan.questions.push_back({q->id, q->structure, q->attention});
        }
        if (sessions_.count(plan.session_id)) throw format_error("event log repeats session " + plan.session_id);
        order_.push_back(plan.session_id);
        sessions_[plan.session_id].plan = std::move(plan);
        ++counter_;
      } else if (kind == "answer") {
        auto& s = sessions_.at(e.at("session_id").get<std::string>());
        ResponseRecord r;
        r.record_id = e.at("record_id").get<std::string>();
        r.session_id = s.plan.session_id;
        r.question_id = e.at("question_id").get<std::string>();
        const auto& item = s.plan.questions.at(s.responses.size());
        if (item.question_id != r.question_id) throw format_error("event log answers out of order in " + r.session_id);
        const auto* q = pool_.find(r.question_id);
        r.structure = q->structure;
        r.attention = q->attention;
        r.answer = e.at("answer").get<std::string>();
        r.normalized = normalize_response(r.answer);
        r.elapsed_seconds = e.at("elapsed_seconds").get<double>();
        r.submitted_at = e.at("submitted_at").get<double>();
        r.correct = response_correct(r.answer, q->answers);
        s.responses.push_back(std::move(r));
      } else {
        throw format_error("unknown event '" + kind + "'");
      }
    } catch (const nlohmann::json::exception& ex) {
      throw format_error(std::string("malformed event: ") + ex.what());
    } catch (const std::out_of_range& ex) {
      throw format_error(std::string("inconsistent event log: ") + ex.what());
    }
  }

  QuestionPool pool_;
  std::uint64_t seed_;
  Clock clock_;
  std::unique_ptr<EventLog> log_;
  mutable std::mutex mu_;
  std::map<std::string, SessionState> sessions_;
  std::vector<std::string> order_;
  std::uint64_t counter_ = 0;
};

// ---------------------------------------------------------------------------
// Scoring

enum class ExclusionCriterion { max_one_attention_error, square_check_must_pass };

constexpr std::string_view to_string(ExclusionCriterion c) noexcept {
  return c == ExclusionCriterion::max_one_attention_error ? "max_one_attention_error" : "square_check_must_pass";
}

inline std::optional<ExclusionCriterion> parse_criterion(std::string_view s) {
  if (s == to_string(ExclusionCriterion::max_one_attention_error)) return ExclusionCriterion::max_one_attention_error;
  if (s == to_string(ExclusionCriterion::square_check_must_pass)) return ExclusionCriterion::square_check_must_pass;
  return std::nullopt;
}

struct Tally {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

struct HumanScore {
  ExclusionCriterion criterion = ExclusionCriterion::max_one_attention_error;
  std::map<std::string, Tally> by_structure;
  Tally aggregate;  // pooled over all retained regular responses
  std::vector<std::string> retained;
  std::vector<std::string> excluded;
  std::size_t incomplete = 0;  // sessions not scored because unfinished
};

inline bool excluded_by(const SessionState& s, ExclusionCriterion c) {
  std::size_t attention_errors = 0;
  bool square_wrong = false;
  for (const auto& r : s.responses) {
    if (!r.attention || r.correct) continue;
    ++attention_errors;
    if (r.structure == "square") square_wrong = true;
  }
  return c == ExclusionCriterion::max_one_attention_error ? attention_errors > 1 : square_wrong;
}

/// Scores complete sessions; unfinished ones are counted and skipped.
inline HumanScore score_humans(const std::vector<SessionState>& sessions, ExclusionCriterion c) {
  HumanScore out;
  out.criterion = c;
  for (auto s : kHumanStructures) out.by_structure[std::string(s)];
  for (const auto& s : sessions) {
    if (!s.complete()) {
      ++out.incomplete;
      continue;
    }
    if (excluded_by(s, c)) {
      out.excluded.push_back(s.plan.session_id);
      continue;
    }
    out.retained.push_back(s.plan.session_id);
    for (const auto& r : s.responses) {
      if (r.attention) continue;
      auto& t = out.by_structure[r.structure];
      ++t.total;
      ++out.aggregate.total;
      if (r.correct) {
        ++t.correct;
        ++out.aggregate.correct;
      }
    }
  }
  if (out.retained.empty() && out.excluded.empty()) throw analysis_error("no complete sessions to score");
  return out;
}

inline std::string two_decimals(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

inline std::string human_table_csv(const HumanScore& s) {
  std::string out = ",Square,Ring,Hexagon,Triangle,Aggregated\nHuman";
  for (auto k : kHumanStructures) out += "," + two_decimals(s.by_structure.at(std::string(k)).accuracy());
  out += "," + two_decimals(s.aggregate.accuracy()) + "\n";
  return out;
}

inline nlohmann::json to_json(const HumanScore& s) {
  nlohmann::json by = nlohmann::json::object();
  for (const auto& [k, t] : s.by_structure) {
    by[k] = {{"correct", t.correct}, {"total", t.total}, {"accuracy", t.accuracy()}};
  }
  return {{"criterion", to_string(s.criterion)},
          {"structures", by},
          {"aggregate",
           {{"correct", s.aggregate.correct}, {"total", s.aggregate.total}, {"accuracy", s.aggregate.accuracy()}}},
          {"retained", s.retained},
          {"excluded", s.excluded},
          {"incomplete", s.incomplete}};
}

}  // namespace spatialnav

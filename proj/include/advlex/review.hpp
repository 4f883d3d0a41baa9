#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "advlex/embeddings.hpp"
#include "advlex/error.hpp"
#include "advlex/senses.hpp"
#include "advlex/synsets.hpp"
#include "advlex/taxonomy.hpp"
#include "advlex/util.hpp"

namespace advlex::review {

using json = nlohmann::ordered_json;

enum class TaskKind { classify_sense, verify_example, edit_gloss, merge_candidate };
enum class TaskState { open, done, skipped };

constexpr std::string_view to_string(TaskKind k) {
  switch (k) {
    case TaskKind::classify_sense: return "classify_sense";
    case TaskKind::verify_example: return "verify_example";
    case TaskKind::edit_gloss: return "edit_gloss";
    case TaskKind::merge_candidate: return "merge_candidate";
  }
  return "";
}

constexpr std::string_view to_string(TaskState s) {
  switch (s) {
    case TaskState::open: return "open";
    case TaskState::done: return "done";
    case TaskState::skipped: return "skipped";
  }
  return "";
}

inline std::optional<TaskKind> parse_task_kind(std::string_view s) {
  for (auto k : {TaskKind::classify_sense, TaskKind::verify_example, TaskKind::edit_gloss,
                 TaskKind::merge_candidate}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

inline std::optional<TaskState> parse_task_state(std::string_view s) {
  for (auto st : {TaskState::open, TaskState::done, TaskState::skipped}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

struct ReviewTask {
  std::string task_id;  // "<kind>:<sense_id>" or "merge_candidate:<a>+<b>"
  TaskKind kind = TaskKind::classify_sense;
  std::vector<std::string> sense_ids;  // one, or two for merge candidates
  TaskState state = TaskState::open;
  std::string assignee;  // empty means unassigned
  int version = 0;
  std::string decision_id;
  json result;
  std::string actor;
};

/// One annotator action. `result` shapes per task kind:
///   classify_sense   {"category": "<label>"}
///   verify_example   {"approve": true} or {"replace": "<sentence>"}
///   edit_gloss       {"gloss": "<text>"}
///   merge_candidate  {"merge": true|false}
/// Any kind also accepts {"skip": true}.
struct ReviewDecision {
  std::string decision_id;
  std::string task_id;
  std::string actor;
  std::string timestamp;
  json result;
  std::string note;
  std::optional<int> expected_version;
};

inline json to_json(const ReviewDecision& d) {
  json j;
  j["decision_id"] = d.decision_id;
  j["task_id"] = d.task_id;
  j["actor"] = d.actor;
  j["timestamp"] = d.timestamp;
  j["result"] = d.result;
  if (!d.note.empty()) j["note"] = d.note;
  if (d.expected_version) j["expected_version"] = *d.expected_version;
  return j;
}

inline ReviewDecision decision_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::BadRequest, "decision", "expected a JSON object");
  ReviewDecision d;
  try {
    d.decision_id = j.at("decision_id").get<std::string>();
    d.task_id = j.at("task_id").get<std::string>();
    d.actor = j.value("actor", std::string{});
    d.timestamp = j.value("timestamp", std::string{});
    d.result = j.at("result");
    d.note = j.value("note", std::string{});
    if (j.contains("expected_version") && !j["expected_version"].is_null()) {
      d.expected_version = j["expected_version"].get<int>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadRequest, "decision", e.what());
  }
  if (d.decision_id.empty()) throw Error(ErrorCode::BadRequest, "decision_id", "must be nonempty");
  return d;
}

inline json to_json(const ReviewTask& t) {
  json j;
  j["task_id"] = t.task_id;
  j["kind"] = to_string(t.kind);
  j["sense_ids"] = t.sense_ids;
  j["state"] = to_string(t.state);
  j["assignee"] = t.assignee.empty() ? json(nullptr) : json(t.assignee);
  j["version"] = t.version;
  if (t.state != TaskState::open) {
    j["decision_id"] = t.decision_id;
    j["result"] = t.result;
    j["actor"] = t.actor;
  }
  return j;
}

struct TaskFilter {
  std::optional<TaskKind> kind;
  std::optional<TaskState> state;
  std::optional<std::string> lemma;
};

struct TaskPage {
  std::vector<ReviewTask> tasks;
  std::optional<std::string> next;  // cursor for ?after=
};

/// Review state as a pure fold of decisions over the drafted senses. Task
/// ids and ordering are deterministic functions of the drafts.
class ReviewState {
 public:
  explicit ReviewState(std::vector<SenseEntry> drafts, double merge_similarity = 0.8) {
    std::sort(drafts.begin(), drafts.end(),
              [](const auto& a, const auto& b) { return a.sense_id < b.sense_id; });
    for (auto& d : drafts) {
      if (!entries_.emplace(d.sense_id, d).second) {
        throw Error(ErrorCode::MalformedRecord, d.sense_id, "duplicate sense id in drafts");
      }
      add_task(TaskKind::classify_sense, {d.sense_id});
      add_task(TaskKind::verify_example, {d.sense_id});
    }
    // Same-lemma drafts whose centroids look alike are offered for merging.
    for (auto a = entries_.begin(); a != entries_.end(); ++a) {
      for (auto b = std::next(a); b != entries_.end(); ++b) {
        const auto& x = a->second;
        const auto& y = b->second;
        if (x.lemma != y.lemma || x.centroid.empty() || y.centroid.empty()) continue;
        if (cosine_similarity(x.centroid, y.centroid) >= merge_similarity) {
          add_task(TaskKind::merge_candidate, {x.sense_id, y.sense_id});
        }
      }
    }
  }

  const std::map<std::string, ReviewTask>& tasks() const { return tasks_; }
  const std::map<std::string, SenseEntry>& entries() const { return entries_; }
  const std::map<std::string, std::string>& merged() const { return merged_into_; }
  std::size_t decision_count() const { return applied_; }

  const ReviewTask& task(const std::string& id) const {
    auto it = tasks_.find(id);
    if (it == tasks_.end()) throw Error(ErrorCode::UnknownTask, id);
    return it->second;
  }

  TaskPage list(const TaskFilter& f, const std::optional<std::string>& after,
                std::size_t limit) const {
    TaskPage page;
    auto it = after ? tasks_.upper_bound(*after) : tasks_.begin();
    for (; it != tasks_.end(); ++it) {
      const auto& t = it->second;
      if (f.kind && t.kind != *f.kind) continue;
      if (f.state && t.state != *f.state) continue;
      if (f.lemma && entries_.at(t.sense_ids.front()).lemma != *f.lemma) continue;
      if (page.tasks.size() == limit) {
        page.next = page.tasks.back().task_id;
        break;
      }
      page.tasks.push_back(t);
    }
    return page;
  }

  enum class Outcome { applied, duplicate };

  /// Checks a decision against the current state without changing anything.
  Outcome check(const ReviewDecision& d) const {
    const auto& t = task(d.task_id);
    if (t.state != TaskState::open) {
      if (t.decision_id == d.decision_id) return Outcome::duplicate;
      throw Error(ErrorCode::TaskAlreadyDone, d.task_id);
    }
    if (seen_decisions_.count(d.decision_id)) {
      throw Error(ErrorCode::BadRequest, d.decision_id, "decision id already used on another task");
    }
    if (d.expected_version && *d.expected_version != t.version) {
      throw Error(ErrorCode::Conflict, d.task_id,
                  "task is at version " + std::to_string(t.version) + ", decision expected " +
                      std::to_string(*d.expected_version));
    }
    if (d.actor.empty()) throw Error(ErrorCode::BadRequest, d.task_id, "actor is required");
    if (d.timestamp.empty()) throw Error(ErrorCode::BadRequest, d.task_id, "timestamp is required");
    validate_result(t, d.result);
    return Outcome::applied;
  }

  Outcome apply(const ReviewDecision& d) {
    auto outcome = check(d);
    if (outcome == Outcome::duplicate) return outcome;
    auto& t = tasks_.at(d.task_id);
    const auto& r = d.result;
    const bool skip = r.contains("skip");
    if (!skip) {
      auto& e = entries_.at(t.sense_ids.front());
      switch (t.kind) {
        case TaskKind::classify_sense:
          e.category = parse_category(r.at("category").get<std::string>());
          classified_.insert(e.sense_id);
          add_task(TaskKind::edit_gloss, {e.sense_id});
          break;
        case TaskKind::verify_example:
          if (r.contains("replace")) {
            e.example = r.at("replace").get<std::string>();
            e.example_occurrence_id.reset();
          }
          e.example_verified = true;
          break;
        case TaskKind::edit_gloss:
          e.gloss = r.at("gloss").get<std::string>();
          break;
        case TaskKind::merge_candidate:
          if (r.at("merge").get<bool>()) merged_into_[t.sense_ids[1]] = t.sense_ids[0];
          break;
      }
      if (classified_.count(e.sense_id) && e.promotable()) {
        e.provenance = Provenance::human_validated;
      }
    }
    t.state = skip ? TaskState::skipped : TaskState::done;
    t.version += 1;
    t.decision_id = d.decision_id;
    t.result = d.result;
    t.actor = d.actor;
    t.assignee = d.actor;
    seen_decisions_.insert(d.decision_id);
    ++applied_;
    return Outcome::applied;
  }

  /// Current senses, merged-away ones listed separately. With no decisions
  /// applied `senses` equals the drafts.
  json snapshot() const {
    json j;
    json senses = json::array();
    for (const auto& [id, e] : entries_) {
      if (!merged_into_.count(id)) senses.push_back(advlex::to_json(e));
    }
    j["senses"] = senses;
    json merged = json::array();
    for (const auto& [from, into] : merged_into_) merged.push_back({{"sense_id", from}, {"into", into}});
    j["merged"] = merged;
    j["decisions"] = applied_;
    return j;
  }

  /// Validated, non-merged senses: the input to synset formation.
  std::vector<SenseEntry> validated_senses() const {
    std::vector<SenseEntry> out;
    for (const auto& [id, e] : entries_) {
      if (!merged_into_.count(id) && e.provenance == Provenance::human_validated) out.push_back(e);
    }
    return out;
  }

 private:
  void add_task(TaskKind kind, std::vector<std::string> senses) {
    ReviewTask t;
    t.kind = kind;
    t.task_id = std::string(to_string(kind)) + ":" + senses.front();
    if (senses.size() > 1) t.task_id += "+" + senses[1];
    t.sense_ids = std::move(senses);
    tasks_.emplace(t.task_id, std::move(t));
  }

  void validate_result(const ReviewTask& t, const nlohmann::ordered_json& r) const {
    auto bad = [&](const std::string& why) {
      throw Error(ErrorCode::InvalidResultType, t.task_id, why);
    };
    if (!r.is_object()) bad("result must be an object");
    if (r.contains("skip")) {
      if (r.size() != 1 || r["skip"] != true) bad("skip result must be exactly {\"skip\": true}");
      return;
    }
    switch (t.kind) {
      case TaskKind::classify_sense: {
        if (r.size() != 1 || !r.contains("category") || !r["category"].is_string()) {
          bad("expected {\"category\": <label>}");
        }
        if (!try_parse_category(r["category"].get<std::string>())) {
          bad("unknown category '" + r["category"].get<std::string>() + "'");
        }
        break;
      }
      case TaskKind::verify_example: {
        if (r.size() != 1) bad("expected {\"approve\": true} or {\"replace\": <sentence>}");
        if (r.contains("approve")) {
          if (r["approve"] != true) bad("approve must be true");
          if (!entries_.at(t.sense_ids.front()).example) bad("no example to approve; use replace");
        } else if (r.contains("replace")) {
          if (!r["replace"].is_string() || trim(r["replace"].get<std::string>()).empty()) {
            bad("replace must be a nonempty sentence");
          }
        } else {
          bad("expected approve or replace");
        }
        break;
      }
      case TaskKind::edit_gloss:
        if (r.size() != 1 || !r.contains("gloss") || !r["gloss"].is_string() ||
            trim(r["gloss"].get<std::string>()).empty()) {
          bad("expected {\"gloss\": <nonempty text>}");
        }
        break;
      case TaskKind::merge_candidate:
        if (r.size() != 1 || !r.contains("merge") || !r["merge"].is_boolean()) {
          bad("expected {\"merge\": true|false}");
        }
        break;
    }
  }

  std::map<std::string, SenseEntry> entries_;
  std::map<std::string, ReviewTask> tasks_;
  std::set<std::string> classified_;
  std::map<std::string, std::string> merged_into_;
  std::set<std::string> seen_decisions_;
  std::size_t applied_ = 0;
};

/// Rebuilds state from drafts plus a decision log. A decision that does not
/// apply cleanly (unknown task, already done, bad result) is a ReplayError.
inline ReviewState replay(const std::vector<SenseEntry>& drafts,
                          const std::vector<ReviewDecision>& log, double merge_similarity = 0.8) {
  ReviewState state(drafts, merge_similarity);
  for (std::size_t i = 0; i < log.size(); ++i) {
    try {
      if (state.apply(log[i]) == ReviewState::Outcome::duplicate) {
        throw Error(ErrorCode::ReplayError, log[i].decision_id, "duplicate entry in log");
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ReplayError) throw;
      throw Error(ErrorCode::ReplayError, "decision " + std::to_string(i + 1), e.what());
    }
  }
  return state;
}

inline std::vector<ReviewDecision> parse_decision_log(std::string_view content) {
  std::vector<ReviewDecision> out;
  for (const auto& j : parse_jsonl(content)) out.push_back(decision_from_json(j));
  return out;
}

/// A review session bound to a run directory: drafts in, an append-only
/// decision log out. Appends are serialized and fsynced before the state
/// changes, so an acknowledged decision is never lost.
class Session {
 public:
  using Clock = std::function<std::string()>;

  Session(fs::path run_dir, double merge_similarity = 0.8, Clock clock = utc_timestamp)
      : run_dir_(std::move(run_dir)),
        merge_similarity_(merge_similarity),
        clock_(std::move(clock)),
        drafts_(parse_sense_entries(read_drafts(run_dir_))),
        state_(replay(drafts_, load_log(), merge_similarity_)) {}

  static fs::path drafts_path(const fs::path& run) { return run / "drafts.jsonl"; }
  static fs::path log_path(const fs::path& run) { return run / "review" / "decisions.jsonl"; }

  const fs::path& run_dir() const { return run_dir_; }

  template <typename Fn>
  auto read(Fn&& fn) const {
    std::lock_guard lock(mu_);
    return fn(state_);
  }

  struct SubmitResult {
    ReviewTask task;
    SenseEntry sense;
    bool duplicate = false;
  };

  SubmitResult submit(ReviewDecision d) {
    std::lock_guard lock(mu_);
    if (d.timestamp.empty()) d.timestamp = clock_();
    auto outcome = state_.check(d);
    if (outcome == ReviewState::Outcome::applied) {
      append_line_durable(log_path(run_dir_), to_json(d).dump());
      state_.apply(d);
    }
    const auto& t = state_.task(d.task_id);
    return {t, state_.entries().at(t.sense_ids.front()),
            outcome == ReviewState::Outcome::duplicate};
  }

  /// Snapshot rebuilt from disk, independent of the in-memory state.
  nlohmann::ordered_json export_state() const {
    std::lock_guard lock(mu_);
    return replay(drafts_, load_log(), merge_similarity_).snapshot();
  }

 private:
  static std::string read_drafts(const fs::path& run) {
    auto p = drafts_path(run);
    if (!fs::exists(p)) throw Error(ErrorCode::MissingStageInput, "select", p.string());
    return read_file(p);
  }

  std::vector<ReviewDecision> load_log() const {
    auto p = log_path(run_dir_);
    if (!fs::exists(p)) return {};
    return parse_decision_log(read_file(p));
  }

  fs::path run_dir_;
  double merge_similarity_;
  Clock clock_;
  std::vector<SenseEntry> drafts_;
  mutable std::mutex mu_;
  ReviewState state_;
};

}  // namespace advlex::review

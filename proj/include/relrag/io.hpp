#pragma once

// JSON documents and traces, CSV result tables.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "relrag/document.hpp"
#include "relrag/error.hpp"
#include "relrag/judge.hpp"
#include "relrag/oracle.hpp"
#include "relrag/simulation.hpp"

namespace relrag {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Parses "exponential[:gamma]", "linear", "uniform" or "explicit:a|b|c".
inline WeightScheme parse_scheme(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  const std::string arg = colon == std::string_view::npos ? "" : std::string(text.substr(colon + 1));
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size())
      fail(ErrorCode::ConfigError, "bad number '" + s + "' in weight scheme '" + std::string(text) + "'");
    return v;
  };
  if (name == "exponential") return Exponential{arg.empty() ? 0.9 : number(arg)};
  if (name == "linear" && arg.empty()) return Linear{};
  if (name == "uniform" && arg.empty()) return Uniform{};
  if (name == "explicit" && !arg.empty()) {
    Explicit e;
    std::stringstream ss(arg);
    for (std::string item; std::getline(ss, item, '|');) e.scores.push_back(number(item));
    return e;
  }
  fail(ErrorCode::ConfigError, "unknown weight scheme '" + std::string(text) + "'");
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::ConfigError, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::ConfigError, "write failed for " + path.string());
}

namespace detail {

inline void check_schema_version(const json& j, const std::string& what) {
  if (!j.contains("schema_version")) return;
  if (!j["schema_version"].is_number_integer() || j["schema_version"].get<int>() != kSchemaVersion)
    fail(ErrorCode::ConfigError, what + ": unsupported schema_version (expected " +
                                     std::to_string(kSchemaVersion) + ")");
}

template <class T>
T field(const json& j, const char* name, const std::string& what) {
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::ConfigError, what + ": missing or malformed field '" + name + "'");
  }
}

}  // namespace detail

/// Reads a document list: either a bare array of {index, weight?, role?,
/// payload?} or {"schema_version": 1, "documents": [...]}. Missing weights are
/// taken from `scheme` at the document's position; role defaults to benign.
inline RetrievalSet documents_from_json(const json& j, const WeightScheme& scheme) {
  const json* arr = &j;
  if (j.is_object()) {
    detail::check_schema_version(j, "documents");
    if (!j.contains("documents")) fail(ErrorCode::ConfigError, "documents: missing 'documents' array");
    arr = &j["documents"];
  }
  if (!arr->is_array()) fail(ErrorCode::ConfigError, "documents: expected an array");
  std::vector<Document> docs;
  bool any_missing = false;
  for (const json& d : *arr) {
    if (!d.is_object()) fail(ErrorCode::ConfigError, "documents: each entry must be an object");
    Document doc;
    doc.index = detail::field<int>(d, "index", "document");
    if (d.contains("weight")) {
      doc.weight = detail::field<double>(d, "weight", "document");
    } else {
      any_missing = true;
      doc.weight = -1.0;
    }
    if (d.contains("role")) doc.role = role_from_string(detail::field<std::string>(d, "role", "document"));
    if (d.contains("payload")) doc.payload = detail::field<std::string>(d, "payload", "document");
    docs.push_back(std::move(doc));
  }
  if (any_missing) {
    const auto w = make_weights(scheme, static_cast<int>(docs.size()));
    for (std::size_t i = 0; i < docs.size(); ++i)
      if (docs[i].weight < 0.0) docs[i].weight = w[i];
  }
  return RetrievalSet(std::move(docs));
}

inline json documents_to_json(const RetrievalSet& set) {
  json arr = json::array();
  for (const Document& d : set) {
    json o{{"index", d.index}, {"weight", d.weight}, {"role", to_string(d.role)}};
    if (d.payload) o["payload"] = *d.payload;
    arr.push_back(std::move(o));
  }
  return {{"schema_version", kSchemaVersion}, {"documents", std::move(arr)}};
}

/// Everything a trace file carries.
struct TraceBundle {
  RetrievalSet set;
  JudgeModel judge;
  AnswerTrace answers;
  std::vector<Verdict> verdicts;  // one per document; Keep unless recorded otherwise
  int recorded_pairs = 0;
  int contradictory_pairs = 0;  // recorded pairs at or above beta
};

/// Trace file layout:
///   {"schema_version": 1, "k": 5, "beta": 0.5, "default_p": 0.0 (optional),
///    "pairs": [{"i": 1, "j": 4, "p": 0.88}, ...],
///    "documents": [...] (optional, defaults to k benign documents),
///    "relevance": {"3": "drop"} (optional),
///    "isolated_answers": {"1": "Paris"} or ["Paris", ...],
///    "context_answers": {"1,3": "Paris"},
///    "final_answers": {"1,2,3": "Paris"},
///    "answer_contradictions": [{"a": "Lyon", "b": "Paris", "p": 0.9}]}
inline TraceBundle trace_from_json(const json& j, const WeightScheme& scheme = Exponential{0.9}) {
  if (!j.is_object()) fail(ErrorCode::ConfigError, "trace: expected an object");
  detail::check_schema_version(j, "trace");
  TraceBundle b;
  const int k = detail::field<int>(j, "k", "trace");
  if (k < 1) fail(ErrorCode::TraceInvalid, "trace: k must be >= 1");
  const double beta = j.contains("beta") ? detail::field<double>(j, "beta", "trace") : 0.5;
  std::optional<double> default_p;
  if (j.contains("default_p") && !j["default_p"].is_null()) default_p = detail::field<double>(j, "default_p", "trace");

  if (j.contains("documents")) {
    b.set = documents_from_json(j["documents"], scheme);
  } else {
    b.set = make_retrieval_set(std::vector<Role>(static_cast<std::size_t>(k), Role::BenignRelevant), scheme);
  }
  if (b.set.k() != k)
    fail(ErrorCode::TraceInvalid, "trace: k = " + std::to_string(k) + " but " + std::to_string(b.set.k()) +
                                      " documents");
  for (int i = 0; i < k; ++i)
    if (b.set[static_cast<std::size_t>(i)].index != i + 1)
      fail(ErrorCode::TraceInvalid, "trace: documents must be indexed 1..k");

  TraceMatrix matrix(k, default_p);
  if (j.contains("pairs")) {
    if (!j["pairs"].is_array()) fail(ErrorCode::ConfigError, "trace: 'pairs' must be an array");
    for (const json& p : j["pairs"]) {
      const int a = detail::field<int>(p, "i", "trace pair");
      const int c = detail::field<int>(p, "j", "trace pair");
      const double prob = detail::field<double>(p, "p", "trace pair");
      const bool fresh = a < 1 || c < 1 || a > k || c > k || a == c || !matrix.has(a, c);
      matrix.set(a, c, prob);
      if (fresh) {
        ++b.recorded_pairs;
        if (prob >= beta) ++b.contradictory_pairs;
      }
    }
  }
  b.judge = JudgeModel::trace(std::move(matrix), beta);
  b.judge.validate();

  b.verdicts.assign(static_cast<std::size_t>(k), Verdict::Keep);
  if (j.contains("relevance")) {
    if (!j["relevance"].is_object()) fail(ErrorCode::ConfigError, "trace: 'relevance' must be an object");
    for (const auto& [key, value] : j["relevance"].items()) {
      int idx = 0;
      try {
        idx = std::stoi(key);
      } catch (const std::exception&) {
        fail(ErrorCode::ConfigError, "trace: bad relevance key '" + key + "'");
      }
      if (idx < 1 || idx > k) fail(ErrorCode::TraceInvalid, "trace: relevance for unknown document " + key);
      const std::string v = value.is_string() ? value.get<std::string>() : "";
      if (v == "keep") b.verdicts[static_cast<std::size_t>(idx - 1)] = Verdict::Keep;
      else if (v == "drop") b.verdicts[static_cast<std::size_t>(idx - 1)] = Verdict::Drop;
      else fail(ErrorCode::ConfigError, "trace: relevance verdict must be \"keep\" or \"drop\"");
    }
  }

  auto tokens = [](const json& obj, const char* name) {
    std::map<std::string, Token> out;
    if (!obj.is_object()) fail(ErrorCode::ConfigError, std::string("trace: '") + name + "' must be an object");
    for (const auto& [key, value] : obj.items()) {
      if (!value.is_string()) fail(ErrorCode::ConfigError, std::string("trace: ") + name + " values must be strings");
      out[key] = value.get<std::string>();
    }
    return out;
  };
  if (j.contains("isolated_answers")) {
    const json& iso = j["isolated_answers"];
    if (iso.is_array()) {
      if (static_cast<int>(iso.size()) != k)
        fail(ErrorCode::TraceInvalid, "trace: isolated_answers array must have k entries");
      for (int i = 0; i < k; ++i) {
        if (!iso[static_cast<std::size_t>(i)].is_string())
          fail(ErrorCode::ConfigError, "trace: isolated_answers values must be strings");
        b.answers.isolated_answers[i + 1] = iso[static_cast<std::size_t>(i)].get<std::string>();
      }
    } else {
      for (const auto& [key, tok] : tokens(iso, "isolated_answers")) {
        int idx = 0;
        try {
          idx = std::stoi(key);
        } catch (const std::exception&) {
          fail(ErrorCode::ConfigError, "trace: bad isolated_answers key '" + key + "'");
        }
        if (idx < 1 || idx > k) fail(ErrorCode::TraceInvalid, "trace: isolated answer for unknown document " + key);
        b.answers.isolated_answers[idx] = tok;
      }
    }
  }
  if (j.contains("context_answers")) b.answers.context_answers = tokens(j["context_answers"], "context_answers");
  if (j.contains("final_answers")) b.answers.final_answers = tokens(j["final_answers"], "final_answers");
  if (j.contains("answer_contradictions")) {
    if (!j["answer_contradictions"].is_array())
      fail(ErrorCode::ConfigError, "trace: 'answer_contradictions' must be an array");
    for (const json& e : j["answer_contradictions"]) {
      auto a = detail::field<std::string>(e, "a", "answer contradiction");
      auto c = detail::field<std::string>(e, "b", "answer contradiction");
      const double p = detail::field<double>(e, "p", "answer contradiction");
      if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::TraceInvalid, "trace: answer contradiction p outside [0,1]");
      if (c < a) std::swap(a, c);
      auto [it, inserted] = b.answers.answer_contradictions.emplace(std::pair{a, c}, p);
      if (!inserted && it->second != p)
        fail(ErrorCode::TraceInvalid, "trace: answer contradiction (" + a + ", " + c + ") recorded twice");
    }
  }
  return b;
}

inline TraceBundle ingest_trace(const std::filesystem::path& path, const WeightScheme& scheme = Exponential{0.9}) {
  return trace_from_json(read_json_file(path), scheme);
}

// ---------------------------------------------------------------------------
// CSV

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline const std::vector<std::string>& estimate_csv_header() {
  static const std::vector<std::string> header{
      "key", "pipeline", "T", "m", "attack", "k", "k_prime", "eps1", "eps2", "flip_noise", "irrelevance_rate",
      "scheme", "trials", "seed",
      "p_malicious_in_mis", "p_malicious_in_mis_ci95", "p_malicious_in_chosen", "p_malicious_in_chosen_ci95",
      "accuracy", "accuracy_ci95", "asr", "asr_ci95", "abstain", "abstain_ci95"};
  return header;
}

inline std::string estimate_csv_row(const SimScenario& s, const RobustnessEstimate& e) {
  std::vector<std::string> cells{s.key(),
                                 s.pipeline_label(),
                                 std::to_string(s.rounds()),
                                 std::to_string(s.context_size()),
                                 s.attack_label(),
                                 std::to_string(s.k),
                                 std::to_string(s.k_prime()),
                                 format_double(s.eps1),
                                 format_double(s.eps2),
                                 format_double(s.flip_noise),
                                 format_double(s.irrelevance_rate),
                                 describe(s.scheme),
                                 std::to_string(e.trials),
                                 std::to_string(e.seed)};
  for (const stats::Proportion* p :
       {&e.malicious_in_mis, &e.malicious_in_chosen, &e.accuracy, &e.asr, &e.abstain}) {
    cells.push_back(format_double(p->estimate()));
    cells.push_back(format_double(stats::wilson(*p).half_width()));
  }
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) line += (i ? "," : "") + csv_escape(cells[i]);
  return line;
}

inline std::string csv_line(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) line += (i ? "," : "") + csv_escape(cells[i]);
  return line;
}

/// Keys of the rows already present in a results CSV, for resuming a sweep.
/// Returns an empty set if the file does not exist; a mismatched header is a
/// ConfigError.
inline std::set<std::string> completed_keys(const std::filesystem::path& csv) {
  std::set<std::string> keys;
  std::ifstream in(csv);
  if (!in) return keys;
  std::string line;
  if (!std::getline(in, line)) return keys;
  if (line != csv_line(estimate_csv_header()))
    fail(ErrorCode::ConfigError, csv.string() + ": header does not match the results format");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = csv_split(line);
    if (cells.size() != estimate_csv_header().size())
      fail(ErrorCode::ConfigError, csv.string() + ": truncated row");
    keys.insert(cells.front());
  }
  return keys;
}

inline json trial_to_json(const SimScenario& s, const TrialOutcome& o) {
  return {{"key", s.key()},
          {"trial", o.trial},
          {"malicious", o.malicious},
          {"dropped", o.dropped},
          {"chosen", o.chosen},
          {"malicious_in_mis", o.malicious_in_mis},
          {"malicious_in_chosen", o.malicious_in_chosen},
          {"abstained", o.abstained},
          {"answer", o.answer}};
}

}  // namespace relrag

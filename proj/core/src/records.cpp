#include "treekt/records.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace treekt {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string id_field(const json& rec, const char* key) {
  const auto& v = rec.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return v.dump();
  throw ParseError(std::string("'") + key + "' must be a string or integer");
}

bool correct_field(const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer()) {
    const auto i = v.get<std::int64_t>();
    if (i == 0 || i == 1) return i == 1;
  }
  throw ParseError("'correct' must be 0/1 or a boolean");
}

template <class Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
      if (!rec.is_object()) throw ParseError("not a JSON object");
      fn(rec);
    } catch (const json::exception& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const UnknownNodeError& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace

std::vector<StreamRecord> parse_stream(std::string_view jsonl,
                                       const ConceptTree& tree,
                                       const QuestionBank* bank) {
  std::vector<StreamRecord> out;
  for_each_line(jsonl, [&](const json& rec) {
    StreamRecord r;
    r.student_id = id_field(rec, "student_id");
    r.question_id = id_field(rec, "question_id");
    r.correct = correct_field(rec.at("correct"));
    r.seq = rec.at("seq").get<std::int64_t>();
    const QuestionMeta* q = bank ? bank->find(r.question_id) : nullptr;
    if (bank && !q) throw ParseError("unknown question '" + r.question_id + "'");
    if (rec.contains("kc_id")) {
      r.kc = tree.index_of(id_field(rec, "kc_id"));
      if (q && q->kc != r.kc) {
        throw ParseError("kc_id of '" + r.question_id + "' disagrees with question metadata");
      }
    } else if (q) {
      r.kc = q->kc;
    } else {
      throw ParseError("record without kc_id");
    }
    if (!tree.is_leaf(r.kc)) {
      throw ParseError("KC '" + tree.id(r.kc) + "' is not a leaf");
    }
    if (rec.contains("difficulty")) {
      auto d = parse_difficulty(rec.at("difficulty").get<std::string>());
      if (!d) throw ParseError("unknown difficulty");
      r.difficulty = *d;
      if (q && q->difficulty != r.difficulty) {
        throw ParseError("difficulty of '" + r.question_id +
                         "' disagrees with question metadata");
      }
    } else if (q) {
      r.difficulty = q->difficulty;
    } else {
      throw ParseError("record without difficulty");
    }
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<StreamRecord> load_stream(const std::filesystem::path& path,
                                      const ConceptTree& tree,
                                      const QuestionBank* bank) {
  return parse_stream(read_file(path), tree, bank);
}

std::string stream_to_jsonl(const ConceptTree& tree,
                            std::span<const StreamRecord> stream) {
  std::string out;
  for (const auto& r : stream) {
    ordered_json rec;
    rec["student_id"] = r.student_id;
    rec["question_id"] = r.question_id;
    rec["kc_id"] = tree.id(r.kc);
    rec["difficulty"] = to_string(r.difficulty);
    rec["correct"] = r.correct ? 1 : 0;
    rec["seq"] = r.seq;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

std::string predictions_to_jsonl(std::span<const PredictionRecord> records) {
  std::string out;
  for (const auto& r : records) {
    ordered_json rec;
    rec["student_id"] = r.student_id;
    rec["question_id"] = r.question_id;
    rec["p_correct"] = r.p_correct;
    rec["actual"] = r.actual ? 1 : 0;
    rec["seq"] = r.seq;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

std::vector<PredictionRecord> parse_predictions(std::string_view jsonl) {
  std::vector<PredictionRecord> out;
  for_each_line(jsonl, [&](const json& rec) {
    PredictionRecord r;
    r.student_id = id_field(rec, "student_id");
    r.question_id = id_field(rec, "question_id");
    r.p_correct = rec.at("p_correct").get<double>();
    if (!(r.p_correct >= 0.0 && r.p_correct <= 1.0)) {
      throw ParseError("p_correct outside [0, 1]");
    }
    r.actual = correct_field(rec.at("actual"));
    r.seq = rec.at("seq").get<std::int64_t>();
    out.push_back(std::move(r));
  });
  return out;
}

std::string predictions_to_csv(std::span<const PredictionRecord> records) {
  std::ostringstream out;
  out.precision(17);
  out << "student_id,question_id,p_correct,actual,seq\n";
  for (const auto& r : records) {
    out << r.student_id << ',' << r.question_id << ',' << r.p_correct << ','
        << (r.actual ? 1 : 0) << ',' << r.seq << '\n';
  }
  return out.str();
}

std::vector<std::pair<std::string, std::vector<StreamRecord>>> group_by_student(
    std::span<const StreamRecord> stream) {
  std::vector<std::pair<std::string, std::vector<StreamRecord>>> out;
  std::map<std::string, std::size_t> slot;
  for (const auto& r : stream) {
    auto [it, inserted] = slot.emplace(r.student_id, out.size());
    if (inserted) out.emplace_back(r.student_id, std::vector<StreamRecord>{});
    out[it->second].second.push_back(r);
  }
  for (auto& [student, records] : out) {
    std::stable_sort(records.begin(), records.end(),
                     [](const auto& a, const auto& b) { return a.seq < b.seq; });
    for (std::size_t i = 1; i < records.size(); ++i) {
      if (records[i].seq == records[i - 1].seq) {
        throw ParseError("student '" + student + "' has two records with seq " +
                         std::to_string(records[i].seq));
      }
    }
  }
  return out;
}

}  // namespace treekt

#include "treekt/questions.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace treekt {

namespace {

struct RawQuestion {
  std::string question_id;
  std::vector<std::string> kcs;
  std::optional<double> solve_rate;
  std::optional<Difficulty> difficulty;
  std::size_t line = 0;
};

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string where(std::size_t line) { return "line " + std::to_string(line); }

// RFC 4180-style split of one record; quoted fields may contain commas.
std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(trim(field));
  return out;
}

double parse_rate(const std::string& text, std::size_t line) {
  double value = 0.0;
  auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(where(line) + ": solve_rate '" + text +
                     "' is not a number");
  }
  if (!(value >= 0.0 && value <= 1.0)) {
    throw ParseError(where(line) + ": solve_rate must lie in [0, 1]");
  }
  return value;
}

std::vector<std::string> split_kcs(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ';')) {
    auto t = trim(part);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

QuestionBank resolve(std::vector<RawQuestion> raw, const ConceptTree& tree,
                     const QuestionLoadOptions& options) {
  check_bins(options.bins);
  std::map<std::string, std::size_t> frequency;
  for (const auto& q : raw) {
    for (const auto& kc : q.kcs) ++frequency[kc];
  }
  std::vector<QuestionMeta> out;
  out.reserve(raw.size());
  for (auto& q : raw) {
    if (q.question_id.empty()) {
      throw ParseError(where(q.line) + ": empty question_id");
    }
    if (q.kcs.empty()) {
      throw ParseError(where(q.line) + ": question '" + q.question_id +
                       "' has no kc_id");
    }
    std::string kc = q.kcs.front();
    if (q.kcs.size() > 1) {
      if (options.multi_kc == MultiKcPolicy::kReject) {
        throw ParseError(where(q.line) + ": question '" + q.question_id +
                         "' is labeled with " + std::to_string(q.kcs.size()) +
                         " KCs; exactly one is required");
      }
      for (const auto& cand : q.kcs) {
        if (frequency[cand] > frequency[kc]) kc = cand;
      }
    }
    const NodeIndex node = tree.index_of(kc);
    if (!tree.is_leaf(node)) {
      throw ParseError(where(q.line) + ": question '" + q.question_id +
                       "' is labeled with non-leaf KC '" + kc + "'");
    }
    QuestionMeta meta{std::move(q.question_id), node, Difficulty::kMedium,
                      q.solve_rate};
    if (q.difficulty) {
      meta.difficulty = *q.difficulty;
      if (q.solve_rate &&
          assign_difficulty(*q.solve_rate, options.bins) != *q.difficulty) {
        throw ParseError(where(q.line) + ": difficulty '" +
                         std::string(to_string(*q.difficulty)) +
                         "' disagrees with solve_rate " +
                         std::to_string(*q.solve_rate));
      }
    } else if (q.solve_rate) {
      meta.difficulty = assign_difficulty(*q.solve_rate, options.bins);
    } else {
      throw ParseError(where(q.line) + ": question '" + meta.question_id +
                       "' needs a difficulty or a solve_rate");
    }
    out.push_back(std::move(meta));
  }
  return QuestionBank(std::move(out));
}

}  // namespace

std::string_view to_string(Difficulty d) {
  switch (d) {
    case Difficulty::kEasy: return "easy";
    case Difficulty::kMedium: return "medium";
    case Difficulty::kHard: return "hard";
  }
  return "unknown";
}

std::optional<Difficulty> parse_difficulty(std::string_view text) {
  const auto t = lower(trim(text));
  if (t == "easy") return Difficulty::kEasy;
  if (t == "medium" || t == "med") return Difficulty::kMedium;
  if (t == "hard") return Difficulty::kHard;
  return std::nullopt;
}

void check_bins(const DifficultyBins& bins) {
  if (!(bins.lo > 0.0 && bins.hi < 1.0 && bins.hi > bins.lo)) {
    throw std::invalid_argument(
        "difficulty bins need 0 < lo < hi < 1 (got lo=" +
        std::to_string(bins.lo) + ", hi=" + std::to_string(bins.hi) + ")");
  }
}

Difficulty assign_difficulty(double solve_rate, const DifficultyBins& bins) {
  check_bins(bins);
  if (!(solve_rate >= 0.0 && solve_rate <= 1.0)) {
    throw std::invalid_argument("solve rate must lie in [0, 1]");
  }
  if (solve_rate >= bins.hi) return Difficulty::kEasy;
  if (solve_rate >= bins.lo) return Difficulty::kMedium;
  return Difficulty::kHard;
}

QuestionBank::QuestionBank(std::vector<QuestionMeta> questions)
    : questions_(std::move(questions)) {
  for (std::size_t i = 0; i < questions_.size(); ++i) {
    auto [it, inserted] = index_.emplace(questions_[i].question_id, i);
    if (!inserted) {
      throw ParseError("duplicate question id '" + questions_[i].question_id +
                       "'");
    }
  }
}

const QuestionMeta* QuestionBank::find(std::string_view question_id) const {
  auto it = index_.find(std::string(question_id));
  return it == index_.end() ? nullptr : &questions_[it->second];
}

std::map<std::string, std::size_t> QuestionBank::counts_by_node(
    const ConceptTree& tree) const {
  std::map<std::string, std::size_t> counts;
  for (const auto& q : questions_) ++counts[tree.id(q.kc)];
  return counts;
}

std::vector<std::string> validate_questions(const ConceptTree& tree,
                                            const QuestionBank& bank,
                                            const DifficultyBins& bins) {
  std::vector<std::string> problems;
  for (const auto& q : bank.questions()) {
    if (q.kc >= tree.size()) {
      problems.push_back(q.question_id + ": KC index out of range");
      continue;
    }
    if (!tree.is_leaf(q.kc)) {
      problems.push_back(q.question_id + ": KC '" + tree.id(q.kc) +
                         "' is not a leaf");
    }
    if (q.solve_rate && assign_difficulty(*q.solve_rate, bins) != q.difficulty) {
      problems.push_back(q.question_id + ": difficulty disagrees with solve rate");
    }
  }
  return problems;
}

QuestionBank parse_questions_csv(std::string_view text, const ConceptTree& tree,
                                 const QuestionLoadOptions& options) {
  std::vector<RawQuestion> raw;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  int col_q = -1, col_kc = -1, col_rate = -1, col_diff = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_csv(line);
    if (header.empty()) {
      header = fields;
      for (std::size_t i = 0; i < header.size(); ++i) {
        const auto h = lower(header[i]);
        if (h == "question_id") col_q = static_cast<int>(i);
        if (h == "kc_id") col_kc = static_cast<int>(i);
        if (h == "solve_rate") col_rate = static_cast<int>(i);
        if (h == "difficulty") col_diff = static_cast<int>(i);
      }
      if (col_q < 0 || col_kc < 0 || (col_rate < 0 && col_diff < 0)) {
        throw ParseError(
            "question CSV header needs question_id, kc_id and solve_rate or "
            "difficulty");
      }
      continue;
    }
    if (fields.size() != header.size()) {
      throw ParseError(where(lineno) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    RawQuestion q;
    q.line = lineno;
    q.question_id = fields[col_q];
    q.kcs = split_kcs(fields[col_kc]);
    if (col_rate >= 0 && !fields[col_rate].empty()) {
      q.solve_rate = parse_rate(fields[col_rate], lineno);
    }
    if (col_diff >= 0 && !fields[col_diff].empty()) {
      q.difficulty = parse_difficulty(fields[col_diff]);
      if (!q.difficulty) {
        throw ParseError(where(lineno) + ": unknown difficulty '" +
                         fields[col_diff] + "'");
      }
    }
    raw.push_back(std::move(q));
  }
  if (header.empty()) throw ParseError("question CSV is empty");
  return resolve(std::move(raw), tree, options);
}

QuestionBank parse_questions_jsonl(std::string_view text,
                                   const ConceptTree& tree,
                                   const QuestionLoadOptions& options) {
  using nlohmann::json;
  std::vector<RawQuestion> raw;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where(lineno) + ": " + e.what());
    }
    if (!rec.is_object()) throw ParseError(where(lineno) + ": not an object");
    RawQuestion q;
    q.line = lineno;
    try {
      q.question_id = rec.at("question_id").is_string()
                          ? rec.at("question_id").get<std::string>()
                          : rec.at("question_id").dump();
      const auto& kc = rec.at("kc_id");
      if (kc.is_array()) {
        for (const auto& k : kc) q.kcs.push_back(k.get<std::string>());
      } else {
        q.kcs = split_kcs(kc.get<std::string>());
      }
      if (rec.contains("solve_rate") && !rec["solve_rate"].is_null()) {
        const double r = rec["solve_rate"].get<double>();
        if (!(r >= 0.0 && r <= 1.0)) {
          throw ParseError(where(lineno) + ": solve_rate must lie in [0, 1]");
        }
        q.solve_rate = r;
      }
      if (rec.contains("difficulty") && !rec["difficulty"].is_null()) {
        const auto d = rec["difficulty"].get<std::string>();
        q.difficulty = parse_difficulty(d);
        if (!q.difficulty) {
          throw ParseError(where(lineno) + ": unknown difficulty '" + d + "'");
        }
      }
    } catch (const json::exception& e) {
      throw ParseError(where(lineno) + ": " + e.what());
    }
    raw.push_back(std::move(q));
  }
  return resolve(std::move(raw), tree, options);
}

QuestionBank load_questions(const std::filesystem::path& path,
                            const ConceptTree& tree,
                            const QuestionLoadOptions& options) {
  const auto text = read_file(path);
  if (lower(path.extension().string()) == ".csv") {
    return parse_questions_csv(text, tree, options);
  }
  return parse_questions_jsonl(text, tree, options);
}

std::string questions_to_csv(const ConceptTree& tree, const QuestionBank& bank) {
  std::ostringstream out;
  out << "question_id,kc_id,difficulty\n";
  for (const auto& q : bank.questions()) {
    out << q.question_id << ',' << tree.id(q.kc) << ',' << to_string(q.difficulty)
        << '\n';
  }
  return out.str();
}

QuestionBank reassign_questions(const ConceptTree& original,
                                const MergeResult& merged,
                                const QuestionBank& bank) {
  std::vector<QuestionMeta> out;
  out.reserve(bank.size());
  for (auto q : bank.questions()) {
    std::string id = original.id(q.kc);
    if (auto it = merged.reassigned.find(id); it != merged.reassigned.end()) {
      id = it->second;
    }
    q.kc = merged.tree.index_of(id);
    out.push_back(std::move(q));
  }
  return QuestionBank(std::move(out));
}

}  // namespace treekt

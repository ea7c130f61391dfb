#ifndef TREEKT_RECORDS_HPP
#define TREEKT_RECORDS_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "treekt/concept_tree.hpp"
#include "treekt/inference.hpp"
#include "treekt/questions.hpp"

namespace treekt {

// One line of an interaction stream:
// {"student_id", "question_id", "kc_id", "difficulty", "correct", "seq"}.
struct StreamRecord {
  std::string student_id;
  std::string question_id;
  NodeIndex kc = 0;
  Difficulty difficulty = Difficulty::kMedium;
  bool correct = false;
  std::int64_t seq = 0;

  Interaction interaction() const { return {question_id, kc, difficulty, correct}; }
  QuestionMeta question() const { return {question_id, kc, difficulty, std::nullopt}; }

  friend bool operator==(const StreamRecord&, const StreamRecord&) = default;
};

// {"student_id", "question_id", "p_correct", "actual", "seq"}.
struct PredictionRecord {
  std::string student_id;
  std::string question_id;
  double p_correct = 0.0;
  bool actual = false;
  std::int64_t seq = 0;

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

// When `bank` is given, kc_id and difficulty may be omitted from a record and
// are taken from the question; if present they must agree with it.
std::vector<StreamRecord> parse_stream(std::string_view jsonl,
                                       const ConceptTree& tree,
                                       const QuestionBank* bank = nullptr);
std::vector<StreamRecord> load_stream(const std::filesystem::path& path,
                                      const ConceptTree& tree,
                                      const QuestionBank* bank = nullptr);
std::string stream_to_jsonl(const ConceptTree& tree,
                            std::span<const StreamRecord> stream);

std::string predictions_to_jsonl(std::span<const PredictionRecord> records);
std::vector<PredictionRecord> parse_predictions(std::string_view jsonl);
std::string predictions_to_csv(std::span<const PredictionRecord> records);

// Per-student subsequences ordered by seq; students in order of first
// appearance. Throws ParseError on a repeated (student, seq) pair.
std::vector<std::pair<std::string, std::vector<StreamRecord>>> group_by_student(
    std::span<const StreamRecord> stream);

}  // namespace treekt

#endif  // TREEKT_RECORDS_HPP

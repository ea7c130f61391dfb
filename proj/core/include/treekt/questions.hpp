#ifndef TREEKT_QUESTIONS_HPP
#define TREEKT_QUESTIONS_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "treekt/concept_tree.hpp"

namespace treekt {

enum class Difficulty : std::uint8_t { kEasy = 0, kMedium = 1, kHard = 2 };

inline constexpr std::size_t kNumDifficulties = 3;
inline constexpr std::array<Difficulty, kNumDifficulties> kAllDifficulties = {
    Difficulty::kEasy, Difficulty::kMedium, Difficulty::kHard};

constexpr std::size_t index_of(Difficulty d) noexcept {
  return static_cast<std::size_t>(d);
}

std::string_view to_string(Difficulty d);
// Accepts easy/medium/hard (and med, case-insensitive).
std::optional<Difficulty> parse_difficulty(std::string_view text);

// Cut points on the historical solve rate. A rate equal to a cut point lands
// in the easier bin.
struct DifficultyBins {
  double hi = 0.75;
  double lo = 0.50;
};

// Throws std::invalid_argument for bins outside 0 < lo < hi < 1 or a rate
// outside [0, 1].
void check_bins(const DifficultyBins& bins);
Difficulty assign_difficulty(double solve_rate, const DifficultyBins& bins = {});

struct QuestionMeta {
  std::string question_id;
  NodeIndex kc = 0;
  Difficulty difficulty = Difficulty::kMedium;
  std::optional<double> solve_rate;
};

enum class MultiKcPolicy {
  kReject,
  // Keep the KC that occurs most often across the whole file; ties go to the
  // KC listed first on the question.
  kKeepMostFrequent,
};

struct QuestionLoadOptions {
  DifficultyBins bins;
  MultiKcPolicy multi_kc = MultiKcPolicy::kReject;
};

class QuestionBank {
 public:
  QuestionBank() = default;
  explicit QuestionBank(std::vector<QuestionMeta> questions);

  std::size_t size() const noexcept { return questions_.size(); }
  bool empty() const noexcept { return questions_.empty(); }
  const std::vector<QuestionMeta>& questions() const noexcept {
    return questions_;
  }
  const QuestionMeta& operator[](std::size_t i) const { return questions_[i]; }
  const QuestionMeta* find(std::string_view question_id) const;

  // Number of questions attached to each node id.
  std::map<std::string, std::size_t> counts_by_node(
      const ConceptTree& tree) const;

 private:
  std::vector<QuestionMeta> questions_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Problems with question metadata against a tree: non-leaf KCs and
// difficulty labels disagreeing with the solve rate.
std::vector<std::string> validate_questions(const ConceptTree& tree,
                                            const QuestionBank& bank,
                                            const DifficultyBins& bins = {});

// CSV with a header row, or JSON-lines. Columns: question_id, kc_id and one
// of solve_rate / difficulty (both allowed; difficulty wins when present).
// Multiple KCs are written as a ';'-separated kc_id in CSV or a JSON array.
QuestionBank parse_questions_csv(std::string_view text, const ConceptTree& tree,
                                 const QuestionLoadOptions& options = {});
QuestionBank parse_questions_jsonl(std::string_view text,
                                   const ConceptTree& tree,
                                   const QuestionLoadOptions& options = {});
// Picks the parser by extension (.csv, otherwise JSON-lines).
QuestionBank load_questions(const std::filesystem::path& path,
                            const ConceptTree& tree,
                            const QuestionLoadOptions& options = {});
std::string questions_to_csv(const ConceptTree& tree, const QuestionBank& bank);

// Re-labels questions after merge_sparse_leaves.
QuestionBank reassign_questions(const ConceptTree& original,
                                const MergeResult& merged,
                                const QuestionBank& bank);

}  // namespace treekt

#endif  // TREEKT_QUESTIONS_HPP

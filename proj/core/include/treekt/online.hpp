#ifndef TREEKT_ONLINE_HPP
#define TREEKT_ONLINE_HPP

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "treekt/concept_tree.hpp"
#include "treekt/em.hpp"
#include "treekt/inference.hpp"
#include "treekt/model.hpp"
#include "treekt/records.hpp"

namespace treekt {

struct OnlineOptions {
  // Full EM on the pooled burn-in data.
  FitOptions fit;
  // When false every student keeps the shared parameters and no EM runs after
  // burn-in; responses still condition the student's posterior.
  bool personalize = true;
  // Run one EM iteration after this many new responses from a student.
  std::size_t update_every = 1;
  // E-step workers used by each personalized update.
  unsigned threads = 1;
};

struct StudentModel {
  std::string student_id;
  Parameters theta;
  // Responses observed after burn-in.
  ObservationSet history;
  // The student's burn-in responses followed by `history`; this is what the
  // student's posterior conditions on.
  ObservationSet conditioning;
  std::size_t pending = 0;
  std::size_t updates = 0;
};

// Pooled burn-in data, one entry per student, in a fixed order.
using BurnInData = std::vector<std::pair<std::string, ObservationSet>>;

// Shared burn-in model plus one personalized model per student. Distinct
// students may be observed and predicted concurrently; calls for the same
// student are serialized.
class ClassroomSession {
 public:
  // Fits theta_init by EM from default_parameters. Throws
  // std::invalid_argument when the burn-in data holds no responses.
  static ClassroomSession burn_in_fit(std::shared_ptr<const ConceptTree> tree,
                                      BurnInData burn_in,
                                      OnlineOptions options = {});
  // Uses `theta` as theta_init without fitting.
  static ClassroomSession from_parameters(
      std::shared_ptr<const ConceptTree> tree, BurnInData burn_in,
      Parameters theta, OnlineOptions options = {});

  ClassroomSession(ClassroomSession&&) noexcept = default;
  ClassroomSession& operator=(ClassroomSession&&) noexcept = default;

  // Appends the response to the student's history, creating the student from
  // theta_init on first contact, then runs one EM iteration on the burn-in
  // data with this student's full history in place of their burn-in entry.
  // Throws UnknownNodeError / std::invalid_argument for a bad KC.
  void observe(std::string_view student_id, const Interaction& interaction);

  Prediction predict_next(std::string_view student_id,
                          const QuestionMeta& question) const;

  const ConceptTree& tree() const noexcept { return *tree_; }
  const Parameters& theta_init() const noexcept { return theta_init_; }
  const FitReport& burn_in_report() const noexcept { return burn_in_report_; }
  const BurnInData& burn_in() const noexcept { return burn_in_; }
  const OnlineOptions& options() const noexcept { return options_; }

  // theta_init for students never observed.
  Parameters parameters_for(std::string_view student_id) const;
  std::optional<StudentModel> student(std::string_view student_id) const;
  std::vector<std::string> student_ids() const;

  // log p(Q_init with student i's full history | params): the objective the
  // student's personalized updates climb.
  double update_objective(std::string_view student_id,
                          const Parameters& params) const;

 private:
  struct Slot {
    mutable std::mutex mutex;
    StudentModel model;
  };

  ClassroomSession() = default;

  const ObservationSet* burn_in_of(std::string_view student_id) const;
  DatasetView update_dataset(std::string_view student_id,
                             const ObservationSet& conditioning) const;
  ObservationSet initial_conditioning(std::string_view student_id) const;
  Slot& slot_for(std::string_view student_id);
  const Slot* find_slot(std::string_view student_id) const;
  void observe_with(std::string_view student_id, const Interaction& interaction,
                    unsigned threads);

  friend std::vector<PredictionRecord> replay(ClassroomSession& session,
                                              std::span<const StreamRecord> stream,
                                              unsigned threads);

  std::shared_ptr<const ConceptTree> tree_;
  BurnInData burn_in_;
  std::map<std::string, std::size_t, std::less<>> burn_in_index_;
  Parameters theta_init_;
  FitReport burn_in_report_;
  OnlineOptions options_;
  std::unique_ptr<std::shared_mutex> students_mutex_ =
      std::make_unique<std::shared_mutex>();
  std::map<std::string, std::unique_ptr<Slot>, std::less<>> students_;
};

// Prequential loop: for each record, predict with the student's current model
// and then reveal the response. Records come back in stream order. With
// threads > 1, students are processed concurrently; results are identical to
// the serial run. Throws std::invalid_argument if a student's seq decreases.
std::vector<PredictionRecord> replay(ClassroomSession& session,
                                     std::span<const StreamRecord> stream,
                                     unsigned threads = 1);

}  // namespace treekt

#endif  // TREEKT_ONLINE_HPP

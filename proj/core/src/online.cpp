#include "treekt/online.hpp"

#include <algorithm>
#include <stdexcept>
#include <thread>
#include <unordered_map>

namespace treekt {

ClassroomSession ClassroomSession::from_parameters(
    std::shared_ptr<const ConceptTree> tree, BurnInData burn_in,
    Parameters theta, OnlineOptions options) {
  if (!tree) throw std::invalid_argument("session needs a tree");
  if (options.update_every == 0) {
    throw std::invalid_argument("update_every must be positive");
  }
  ClassroomSession s;
  s.tree_ = std::move(tree);
  s.burn_in_ = std::move(burn_in);
  for (std::size_t i = 0; i < s.burn_in_.size(); ++i) {
    if (!s.burn_in_index_.emplace(s.burn_in_[i].first, i).second) {
      throw std::invalid_argument("student '" + s.burn_in_[i].first +
                                  "' appears twice in the burn-in data");
    }
  }
  s.theta_init_ = std::move(theta);
  s.burn_in_report_.params = s.theta_init_;
  s.options_ = options;
  return s;
}

ClassroomSession ClassroomSession::burn_in_fit(
    std::shared_ptr<const ConceptTree> tree, BurnInData burn_in,
    OnlineOptions options) {
  const bool any = std::any_of(burn_in.begin(), burn_in.end(),
                               [](const auto& e) { return !e.second.empty(); });
  if (!any) throw std::invalid_argument("burn-in data holds no responses");
  auto init = default_parameters(*tree);
  auto s = from_parameters(tree, std::move(burn_in), init, options);
  std::vector<const ObservationSet*> sets;
  for (const auto& [id, obs] : s.burn_in_) sets.push_back(&obs);
  s.burn_in_report_ = fit(*s.tree_, DatasetView(std::move(sets)), init, options.fit);
  s.theta_init_ = s.burn_in_report_.params;
  return s;
}

const ObservationSet* ClassroomSession::burn_in_of(
    std::string_view student_id) const {
  auto it = burn_in_index_.find(student_id);
  return it == burn_in_index_.end() ? nullptr : &burn_in_[it->second].second;
}

ObservationSet ClassroomSession::initial_conditioning(
    std::string_view student_id) const {
  if (const auto* own = burn_in_of(student_id)) return *own;
  return {};
}

DatasetView ClassroomSession::update_dataset(
    std::string_view student_id, const ObservationSet& conditioning) const {
  std::vector<const ObservationSet*> sets;
  sets.reserve(burn_in_.size() + 1);
  bool placed = false;
  for (const auto& [id, obs] : burn_in_) {
    if (id == student_id) {
      sets.push_back(&conditioning);
      placed = true;
    } else {
      sets.push_back(&obs);
    }
  }
  if (!placed) sets.push_back(&conditioning);
  return DatasetView(std::move(sets));
}

ClassroomSession::Slot& ClassroomSession::slot_for(std::string_view student_id) {
  {
    std::shared_lock lock(*students_mutex_);
    auto it = students_.find(student_id);
    if (it != students_.end()) return *it->second;
  }
  std::unique_lock lock(*students_mutex_);
  auto it = students_.find(student_id);
  if (it != students_.end()) return *it->second;
  auto slot = std::make_unique<Slot>();
  slot->model.student_id = std::string(student_id);
  slot->model.theta = theta_init_;
  slot->model.conditioning = initial_conditioning(student_id);
  auto [pos, _] = students_.emplace(std::string(student_id), std::move(slot));
  return *pos->second;
}

const ClassroomSession::Slot* ClassroomSession::find_slot(
    std::string_view student_id) const {
  std::shared_lock lock(*students_mutex_);
  auto it = students_.find(student_id);
  return it == students_.end() ? nullptr : it->second.get();
}

void ClassroomSession::observe(std::string_view student_id,
                               const Interaction& interaction) {
  observe_with(student_id, interaction, options_.threads);
}

void ClassroomSession::observe_with(std::string_view student_id,
                                    const Interaction& interaction,
                                    unsigned threads) {
  Slot& slot = slot_for(student_id);
  std::lock_guard lock(slot.mutex);
  auto& m = slot.model;
  // add() validates before mutating, so a bad KC leaves the model intact.
  m.history.add(*tree_, interaction);
  m.conditioning.add(*tree_, interaction);
  if (!options_.personalize) return;
  if (++m.pending < options_.update_every) return;
  m.pending = 0;
  m.theta = one_step_update(*tree_, m.theta,
                            update_dataset(student_id, m.conditioning), threads);
  ++m.updates;
}

Prediction ClassroomSession::predict_next(std::string_view student_id,
                                          const QuestionMeta& question) const {
  if (question.kc >= tree_->size()) {
    throw UnknownNodeError("#" + std::to_string(question.kc));
  }
  if (const Slot* slot = find_slot(student_id)) {
    std::lock_guard lock(slot->mutex);
    const auto belief = posteriors(*tree_, slot->model.theta, slot->model.conditioning);
    return predict(slot->model.theta, belief, question);
  }
  const auto conditioning = initial_conditioning(student_id);
  const auto belief = posteriors(*tree_, theta_init_, conditioning);
  return predict(theta_init_, belief, question);
}

Parameters ClassroomSession::parameters_for(std::string_view student_id) const {
  if (const Slot* slot = find_slot(student_id)) {
    std::lock_guard lock(slot->mutex);
    return slot->model.theta;
  }
  return theta_init_;
}

std::optional<StudentModel> ClassroomSession::student(
    std::string_view student_id) const {
  if (const Slot* slot = find_slot(student_id)) {
    std::lock_guard lock(slot->mutex);
    return slot->model;
  }
  return std::nullopt;
}

std::vector<std::string> ClassroomSession::student_ids() const {
  std::shared_lock lock(*students_mutex_);
  std::vector<std::string> out;
  for (const auto& [id, _] : students_) out.push_back(id);
  return out;
}

double ClassroomSession::update_objective(std::string_view student_id,
                                          const Parameters& params) const {
  ObservationSet conditioning;
  if (const Slot* slot = find_slot(student_id)) {
    std::lock_guard lock(slot->mutex);
    conditioning = slot->model.conditioning;
  } else {
    conditioning = initial_conditioning(student_id);
  }
  return dataset_log_likelihood(*tree_, params,
                                update_dataset(student_id, conditioning), 1);
}

std::vector<PredictionRecord> replay(ClassroomSession& session,
                                     std::span<const StreamRecord> stream,
                                     unsigned threads) {
  // Per-student record indices in stream order.
  std::vector<std::vector<std::size_t>> by_student;
  std::unordered_map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    auto [it, inserted] = slot.emplace(stream[i].student_id, by_student.size());
    if (inserted) by_student.emplace_back();
    auto& list = by_student[it->second];
    if (!list.empty() && stream[list.back()].seq >= stream[i].seq) {
      throw std::invalid_argument("stream is not ordered for student '" +
                                  stream[i].student_id + "'");
    }
    list.push_back(i);
  }

  std::vector<PredictionRecord> out(stream.size());
  auto step = [&](std::size_t i, unsigned em_threads) {
    const auto& rec = stream[i];
    const auto pred = session.predict_next(rec.student_id, rec.question());
    out[i] = {rec.student_id, rec.question_id, pred.prob_correct, rec.correct,
              rec.seq};
    session.observe_with(rec.student_id, rec.interaction(), em_threads);
  };

  const std::size_t workers =
      std::min<std::size_t>(std::max(1u, threads), by_student.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < stream.size(); ++i) {
      step(i, session.options_.threads);
    }
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t s = w; s < by_student.size(); s += workers) {
            for (std::size_t i : by_student[s]) step(i, 1);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace treekt

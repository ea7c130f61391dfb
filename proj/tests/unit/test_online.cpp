#include <chrono>
#include <cmath>

#include "doctest.h"
#include "support.hpp"

using namespace treekt;
using treekt::testing::answer;
using treekt::testing::make_tree;

namespace {

struct Fixture {
  std::shared_ptr<const ConceptTree> tree;
  BurnInData burn_in;
  std::vector<StreamRecord> rest;
  Parameters truth;
};

Fixture classroom(std::size_t students, std::size_t per_student, std::size_t burn,
                  std::uint64_t seed) {
  Rng rng(seed);
  Fixture f;
  f.tree = std::make_shared<const ConceptTree>(random_tree(10, rng));
  f.truth = random_parameters(*f.tree, rng);
  const auto bank = make_question_bank(*f.tree, 4, rng);
  SimConfig cfg;
  cfg.n_students = students;
  cfg.interactions_per_student = per_student;
  cfg.seed = seed;
  const auto room = generate_classroom(*f.tree, f.truth, bank, cfg);
  for (const auto& [sid, recs] : group_by_student(room.stream)) {
    ObservationSet obs;
    for (std::size_t i = 0; i < burn && i < recs.size(); ++i) {
      obs.add(*f.tree, recs[i].interaction());
    }
    f.burn_in.emplace_back(sid, std::move(obs));
  }
  for (const auto& r : room.stream) {
    if (r.seq >= static_cast<std::int64_t>(burn)) f.rest.push_back(r);
  }
  return f;
}

}  // namespace

TEST_CASE("burn-in fit produces a monotone trace") {
  auto f = classroom(100, 10, 10, 1);
  const auto session = ClassroomSession::burn_in_fit(f.tree, f.burn_in);
  const auto& trace = session.burn_in_report().log_likelihood_trace;
  REQUIRE(trace.size() >= 2);
  for (std::size_t t = 1; t < trace.size(); ++t) CHECK(trace[t] >= trace[t - 1] - 1e-9);
  CHECK(session.theta_init() == session.burn_in_report().params);
  CHECK(session.student_ids().empty());
}

TEST_CASE("burn-in edge cases") {
  const auto tree = std::make_shared<const ConceptTree>(make_tree({{"A", ""}}));
  BurnInData one{{"s", {}}};
  one[0].second.add(*tree, answer(*tree, "A", Difficulty::kEasy, true));
  CHECK_NOTHROW(ClassroomSession::burn_in_fit(tree, one));
  BurnInData none{{"s", {}}};
  CHECK_THROWS_AS(ClassroomSession::burn_in_fit(tree, none), std::invalid_argument);
  CHECK_THROWS_AS(ClassroomSession::burn_in_fit(tree, {}), std::invalid_argument);
  BurnInData twice{{"s", one[0].second}, {"s", one[0].second}};
  CHECK_THROWS_AS(ClassroomSession::burn_in_fit(tree, twice), std::invalid_argument);
}

TEST_CASE("unseen students predict with the shared parameters") {
  auto f = classroom(20, 10, 10, 2);
  const auto session = ClassroomSession::burn_in_fit(f.tree, f.burn_in);
  const auto leaf = f.tree->leaves().front();
  const QuestionMeta q{"q", leaf, Difficulty::kMedium, {}};
  const auto pred = session.predict_next("stranger", q);
  const auto prior = posteriors(*f.tree, session.theta_init(), ObservationSet{});
  CHECK(pred.prob_correct == predict(session.theta_init(), prior, q).prob_correct);
  CHECK(session.parameters_for("stranger") == session.theta_init());
}

TEST_CASE("a known student's burn-in responses condition their prediction") {
  auto f = classroom(20, 10, 10, 3);
  const auto session = ClassroomSession::burn_in_fit(f.tree, f.burn_in);
  const auto& [sid, obs] = f.burn_in.front();
  const auto leaf = f.tree->leaves().front();
  const QuestionMeta q{"q", leaf, Difficulty::kEasy, {}};
  const auto expected =
      predict(session.theta_init(), posteriors(*f.tree, session.theta_init(), obs), q);
  CHECK(session.predict_next(sid, q).prob_correct == expected.prob_correct);
}

TEST_CASE("observe creates the student and runs one EM step on the union") {
  auto f = classroom(30, 15, 10, 4);
  auto session = ClassroomSession::burn_in_fit(f.tree, f.burn_in);
  const std::string sid = f.burn_in[3].first;
  const auto rec = f.rest.front();
  StreamRecord mine = rec;
  mine.student_id = sid;
  session.observe(sid, mine.interaction());

  // Independent reconstruction of the update dataset.
  std::vector<ObservationSet> expected_data;
  for (const auto& [id, obs] : f.burn_in) {
    ObservationSet copy = obs;
    if (id == sid) copy.add(*f.tree, mine.interaction());
    expected_data.push_back(std::move(copy));
  }
  const auto expected =
      one_step_update(*f.tree, session.theta_init(), DatasetView(expected_data));
  const auto model = session.student(sid);
  REQUIRE(model.has_value());
  CHECK(model->theta == expected);
  CHECK(model->history.size() == 1);
  CHECK(model->conditioning.size() == f.burn_in[3].second.size() + 1);
  CHECK(model->updates == 1);
}

TEST_CASE("new students are appended to the update dataset") {
  auto f = classroom(10, 10, 10, 5);
  auto session = ClassroomSession::burn_in_fit(f.tree, f.burn_in);
  const auto leaf = f.tree->leaves().back();
  const Interaction x{"q", leaf, Difficulty::kHard, true};
  session.observe("newcomer", x);
  std::vector<ObservationSet> expected_data;
  for (const auto& [id, obs] : f.burn_in) expected_data.push_back(obs);
  ObservationSet mine;
  mine.add(*f.tree, x);
  expected_data.push_back(mine);
  CHECK(session.parameters_for("newcomer") ==
        one_step_update(*f.tree, session.theta_init(), DatasetView(expected_data)));
}

TEST_CASE("updates never lower the student's objective") {
  auto f = classroom(40, 30, 10, 6);
  auto session = ClassroomSession::burn_in_fit(f.tree, f.burn_in);
  for (std::size_t i = 0; i < 60; ++i) {
    const auto& r = f.rest[i];
    const auto before_params = session.parameters_for(r.student_id);
    session.observe(r.student_id, r.interaction());
    const auto after_params = session.parameters_for(r.student_id);
    CHECK(session.update_objective(r.student_id, after_params) >=
          session.update_objective(r.student_id, before_params) - 1e-9);
  }
}

TEST_CASE("observing one student leaves the others untouched") {
  auto f = classroom(10, 20, 10, 7);
  auto session = ClassroomSession::burn_in_fit(f.tree, f.burn_in);
  const std::string a = f.burn_in[0].first;
  const std::string b = f.burn_in[1].first;
  const auto leaf = f.tree->leaves().front();
  const QuestionMeta q{"q", leaf, Difficulty::kEasy, {}};
  session.observe(b, {"q0", leaf, Difficulty::kEasy, true});
  const auto theta_b = session.parameters_for(b);
  const auto pred_b = session.predict_next(b, q).prob_correct;
  for (int i = 0; i < 10; ++i) {
    session.observe(a, {"q" + std::to_string(i), leaf, Difficulty::kHard, i % 2 == 0});
  }
  CHECK(session.parameters_for(b) == theta_b);
  CHECK(session.predict_next(b, q).prob_correct == pred_b);
}

TEST_CASE("correct answers raise the prediction above an unseen student's") {
  auto f = classroom(30, 10, 10, 8);
  auto session = ClassroomSession::burn_in_fit(f.tree, f.burn_in);
  const auto leaf = f.tree->leaves().front();
  const QuestionMeta q{"q", leaf, Difficulty::kMedium, {}};
  for (int i = 0; i < 5; ++i) {
    session.observe("keen", {"q" + std::to_string(i), leaf, Difficulty::kMedium, true});
  }
  CHECK(session.predict_next("keen", q).prob_correct >
        session.predict_next("stranger", q).prob_correct);
}

TEST_CASE("fixed parameters and batched updates") {
  auto f = classroom(10, 20, 10, 9);
  OnlineOptions fixed;
  fixed.personalize = false;
  auto s1 = ClassroomSession::from_parameters(f.tree, f.burn_in, f.truth, fixed);
  const auto sid = f.burn_in[0].first;
  const auto leaf = f.tree->leaves().front();
  for (int i = 0; i < 4; ++i) s1.observe(sid, {"q", leaf, Difficulty::kEasy, true});
  CHECK(s1.parameters_for(sid) == f.truth);
  CHECK(s1.student(sid)->history.size() == 4);

  OnlineOptions batched;
  batched.update_every = 3;
  auto s2 = ClassroomSession::from_parameters(f.tree, f.burn_in, f.truth, batched);
  for (int i = 0; i < 7; ++i) s2.observe(sid, {"q", leaf, Difficulty::kEasy, true});
  CHECK(s2.student(sid)->updates == 2);

  OnlineOptions bad;
  bad.update_every = 0;
  CHECK_THROWS_AS(ClassroomSession::from_parameters(f.tree, f.burn_in, f.truth, bad),
                  std::invalid_argument);
}

TEST_CASE("a bad KC leaves the student model intact") {
  auto f = classroom(5, 10, 10, 10);
  auto session = ClassroomSession::burn_in_fit(f.tree, f.burn_in);
  const auto sid = f.burn_in[0].first;
  CHECK_THROWS(session.observe(sid, {"q", f.tree->root(), Difficulty::kEasy, true}));
  CHECK_THROWS_AS(session.observe(sid, {"q", 999, Difficulty::kEasy, true}),
                  UnknownNodeError);
  const auto model = session.student(sid);
  if (model) CHECK(model->history.empty());
  CHECK_THROWS_AS(session.predict_next(sid, {"q", 999, Difficulty::kEasy, {}}),
                  UnknownNodeError);
}

TEST_CASE("replay contract") {
  auto f = classroom(25, 20, 10, 11);
  SUBCASE("empty stream") {
    auto session = ClassroomSession::burn_in_fit(f.tree, f.burn_in);
    CHECK(replay(session, {}).empty());
  }
  SUBCASE("one interaction") {
    auto session = ClassroomSession::burn_in_fit(f.tree, f.burn_in);
    const std::vector<StreamRecord> one{f.rest.front()};
    const auto out = replay(session, one);
    REQUIRE(out.size() == 1);
    CHECK(session.student(one[0].student_id)->updates == 1);
    CHECK(out[0].actual == one[0].correct);
  }
  SUBCASE("prediction precedes observation") {
    auto session = ClassroomSession::burn_in_fit(f.tree, f.burn_in);
    auto fresh = ClassroomSession::burn_in_fit(f.tree, f.burn_in);
    const auto out = replay(session, f.rest);
    REQUIRE(out.size() == f.rest.size());
    const auto& first = f.rest.front();
    CHECK(out[0].p_correct == fresh.predict_next(first.student_id, first.question()).prob_correct);
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(out[i].student_id == f.rest[i].student_id);
      CHECK(out[i].seq == f.rest[i].seq);
    }
  }
  SUBCASE("identical streams, identical records, any thread count") {
    auto s1 = ClassroomSession::burn_in_fit(f.tree, f.burn_in);
    auto s2 = ClassroomSession::burn_in_fit(f.tree, f.burn_in);
    auto s4 = ClassroomSession::burn_in_fit(f.tree, f.burn_in);
    const auto a = replay(s1, f.rest, 1);
    const auto b = replay(s2, f.rest, 1);
    const auto c = replay(s4, f.rest, 4);
    CHECK(a == b);
    CHECK(a == c);
    for (const auto& sid : s1.student_ids()) {
      CHECK(s1.parameters_for(sid) == s4.parameters_for(sid));
    }
  }
  SUBCASE("out-of-order stream is rejected") {
    auto session = ClassroomSession::burn_in_fit(f.tree, f.burn_in);
    auto bad = f.rest;
    std::swap(bad[0].seq, bad[f.burn_in.size()].seq);
    CHECK_THROWS_AS(replay(session, bad), std::invalid_argument);
  }
}

TEST_CASE("observe cost grows linearly with the update dataset") {
  auto time_observe = [](std::size_t students) {
    auto f = classroom(students, 10, 10, 12);
    auto session = ClassroomSession::burn_in_fit(f.tree, f.burn_in);
    const auto leaf = f.tree->leaves().front();
    double best = 1e30;
    for (int r = 0; r < 5; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      session.observe("probe", {"q", leaf, Difficulty::kEasy, r % 2 == 0});
      const auto t1 = std::chrono::steady_clock::now();
      best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    return best;
  };
  const double small = time_observe(100);
  const double large = time_observe(1000);
  CHECK(large / small < 30.0);
  CHECK(large / small > 2.0);
}

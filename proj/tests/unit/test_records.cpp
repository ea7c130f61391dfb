#include "doctest.h"
#include "support.hpp"

using namespace treekt;
using treekt::testing::make_tree;

namespace {

ConceptTree tree3() { return make_tree({{"R", ""}, {"a", "R"}, {"b", "R"}}); }

}  // namespace

TEST_CASE("stream parsing") {
  const auto tree = tree3();
  const auto stream = parse_stream(
      R"({"student_id": "s1", "question_id": "q1", "kc_id": "a", "difficulty": "easy", "correct": 1, "seq": 0}
{"student_id": 7, "question_id": 12, "kc_id": "b", "difficulty": "hard", "correct": false, "seq": 3}
)",
      tree);
  REQUIRE(stream.size() == 2);
  CHECK(stream[0].student_id == "s1");
  CHECK(stream[0].correct);
  CHECK(stream[1].student_id == "7");
  CHECK(stream[1].question_id == "12");
  CHECK(stream[1].difficulty == Difficulty::kHard);
  CHECK_FALSE(stream[1].correct);
  CHECK(stream[1].seq == 3);
}

TEST_CASE("stream fills KC and difficulty from question metadata") {
  const auto tree = tree3();
  const auto bank = parse_questions_csv("question_id,kc_id,solve_rate\nq1,a,0.3\n", tree);
  const auto stream = parse_stream(
      R"({"student_id": "s", "question_id": "q1", "correct": 0, "seq": 1})", tree, &bank);
  REQUIRE(stream.size() == 1);
  CHECK(stream[0].kc == tree.index_of("a"));
  CHECK(stream[0].difficulty == Difficulty::kHard);
  CHECK_THROWS_AS(parse_stream(R"({"student_id": "s", "question_id": "q1", "kc_id": "b", "correct": 0, "seq": 1})",
                               tree, &bank),
                  ParseError);
  CHECK_THROWS_AS(parse_stream(R"({"student_id": "s", "question_id": "zz", "correct": 0, "seq": 1})",
                               tree, &bank),
                  ParseError);
}

TEST_CASE("stream errors") {
  const auto tree = tree3();
  CHECK_THROWS_AS(parse_stream("{not json}", tree), ParseError);
  CHECK_THROWS_AS(parse_stream(R"({"student_id": "s", "question_id": "q", "kc_id": "R", "difficulty": "easy", "correct": 1, "seq": 0})",
                               tree),
                  ParseError);
  CHECK_THROWS_AS(parse_stream(R"({"student_id": "s", "question_id": "q", "kc_id": "a", "correct": 1, "seq": 0})",
                               tree),
                  ParseError);
  CHECK_THROWS_AS(parse_stream(R"({"student_id": "s", "question_id": "q", "kc_id": "a", "difficulty": "easy", "correct": 2, "seq": 0})",
                               tree),
                  ParseError);
  CHECK_THROWS_AS(load_stream(treekt::testing::data_path("missing.jsonl"), tree), IoError);
}

TEST_CASE("stream and prediction round-trips") {
  Rng rng(1);
  const auto tree = random_tree(12, rng);
  const auto bank = make_question_bank(tree, 3, rng);
  SimConfig cfg;
  cfg.n_students = 8;
  cfg.interactions_per_student = 6;
  const auto room = generate_classroom(tree, random_parameters(tree, rng), bank, cfg);
  const auto text = stream_to_jsonl(tree, room.stream);
  const auto again = parse_stream(text, tree);
  CHECK(again == room.stream);
  CHECK(stream_to_jsonl(tree, again) == text);

  std::vector<PredictionRecord> preds;
  for (const auto& r : room.stream) {
    preds.push_back({r.student_id, r.question_id, uniform01(rng), r.correct, r.seq});
  }
  CHECK(parse_predictions(predictions_to_jsonl(preds)) == preds);
  const auto csv = predictions_to_csv(preds);
  CHECK(csv.rfind("student_id,question_id,p_correct,actual,seq\n", 0) == 0);
}

TEST_CASE("grouping by student orders by seq") {
  const auto tree = tree3();
  const NodeIndex a = tree.index_of("a");
  const std::vector<StreamRecord> stream{{"y", "q1", a, Difficulty::kEasy, true, 5},
                                         {"x", "q2", a, Difficulty::kEasy, true, 2},
                                         {"y", "q3", a, Difficulty::kEasy, false, 1}};
  const auto groups = group_by_student(stream);
  REQUIRE(groups.size() == 2);
  CHECK(groups[0].first == "y");
  CHECK(groups[0].second[0].seq == 1);
  CHECK(groups[0].second[1].seq == 5);
  CHECK(groups[1].first == "x");

  auto dup = stream;
  dup[2].seq = 5;
  CHECK_THROWS_AS(group_by_student(dup), ParseError);
}

// treekt: command-line front end for fitting, simulating and evaluating
// hidden Markov tree knowledge-tracing models.
//
// Exit codes: 0 success, 1 domain failure (invalid tree, oracle mismatch,
// bad arguments for the model), 2 environment failure (I/O, parse, usage).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "treekt/treekt.hpp"

namespace fs = std::filesystem;
using namespace treekt;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitEnvironment = 2;

struct RunConfig {
  std::string tree;
  std::string questions;
  std::string stream;
  std::string out = ".";
  std::size_t burn_in = 10;
  double tol = 1e-6;
  std::size_t max_iters = 100;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  double bin_hi = 0.75;
  double bin_lo = 0.50;
  double threshold = 0.5;
};

// Flags shared by the data-reading subcommands. Each flag can also come from
// the environment (TREEKT_<NAME>) or a key=value config file.
void add_data_flags(CLI::App& cmd, RunConfig& cfg, bool need_stream) {
  cmd.add_option("--tree", cfg.tree, "concept tree JSON")
      ->required()
      ->envname("TREEKT_TREE");
  cmd.add_option("--questions", cfg.questions,
                 "question metadata (.csv or JSON-lines)")
      ->envname("TREEKT_QUESTIONS");
  if (need_stream) {
    cmd.add_option("--stream", cfg.stream, "interaction stream (JSON-lines)")
        ->required()
        ->envname("TREEKT_STREAM");
  }
  cmd.add_option("--bin-hi", cfg.bin_hi, "solve rate at or above which a question is easy")
      ->capture_default_str()
      ->envname("TREEKT_BIN_HI");
  cmd.add_option("--bin-lo", cfg.bin_lo, "solve rate at or above which a question is medium")
      ->capture_default_str()
      ->envname("TREEKT_BIN_LO");
}

void add_out_flag(CLI::App& cmd, RunConfig& cfg) {
  cmd.add_option("--out", cfg.out, "output directory")
      ->capture_default_str()
      ->envname("TREEKT_OUT");
}

void add_em_flags(CLI::App& cmd, RunConfig& cfg) {
  cmd.add_option("--burn-in", cfg.burn_in, "burn-in responses per student")
      ->capture_default_str()
      ->envname("TREEKT_BURN_IN");
  cmd.add_option("--tol", cfg.tol, "EM convergence tolerance on log-likelihood")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber)
      ->envname("TREEKT_TOL");
  cmd.add_option("--max-iters", cfg.max_iters, "maximum EM iterations")
      ->capture_default_str()
      ->envname("TREEKT_MAX_ITERS");
}

void add_threads_flag(CLI::App& cmd, RunConfig& cfg) {
  cmd.add_option("--threads", cfg.threads, "worker threads")
      ->capture_default_str()
      ->check(CLI::Range(1u, 1024u))
      ->envname("TREEKT_THREADS");
}

void add_seed_flag(CLI::App& cmd, RunConfig& cfg) {
  cmd.add_option("--seed", cfg.seed, "master random seed")
      ->capture_default_str()
      ->envname("TREEKT_SEED");
}

void add_config_flag(CLI::App& cmd) {
  cmd.add_option("--config", "key = value configuration file; command-line flags win");
}

bool truthy(const std::string& v) {
  return v == "true" || v == "1" || v == "on" || v == "yes";
}

// CLI11 reads config files only for the top-level app, so a subcommand's
// --config file is expanded into arguments placed before the command-line
// ones. Options take their last value, so explicit flags override the file.
// Returns the arguments in the reversed order CLI11 expects.
std::vector<std::string> expand_config(CLI::App& app, int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  const auto sub_pos = std::find_if(args.begin(), args.end(),
                                    [](const std::string& a) { return a.rfind('-', 0) != 0; });
  CLI::App* sub = sub_pos == args.end() ? nullptr : app.get_subcommand_no_throw(*sub_pos);
  std::string path;
  for (auto it = sub_pos; sub && it != args.end(); ++it) {
    if (*it == "--config" && it + 1 != args.end()) path = *(it + 1);
    if (it->rfind("--config=", 0) == 0) path = it->substr(9);
  }
  if (!path.empty()) {
    std::vector<std::string> extra;
    for (const auto& item : CLI::ConfigINI().from_file(path)) {
      if (!item.parents.empty() && item.parents != std::vector<std::string>{sub->get_name()}) {
        continue;
      }
      const auto* opt = sub->get_option_no_throw("--" + item.name);
      if (opt == nullptr || item.name == "config") throw CLI::ConfigError::Extras(item.name);
      if (opt->get_expected_max() == 0) {
        if (item.inputs.size() == 1 && truthy(item.inputs.front())) {
          extra.push_back("--" + item.name);
        }
        continue;
      }
      extra.push_back("--" + item.name);
      extra.insert(extra.end(), item.inputs.begin(), item.inputs.end());
    }
    args.insert(sub_pos + 1, extra.begin(), extra.end());
  }
  std::reverse(args.begin(), args.end());
  return args;
}

QuestionLoadOptions question_options(const RunConfig& cfg) {
  QuestionLoadOptions opts;
  opts.bins = {cfg.bin_hi, cfg.bin_lo};
  check_bins(opts.bins);
  return opts;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

struct LoadedData {
  std::shared_ptr<const ConceptTree> tree;
  std::optional<QuestionBank> bank;
  std::vector<StreamRecord> stream;
};

LoadedData load_inputs(const RunConfig& cfg) {
  LoadedData data;
  data.tree = std::make_shared<const ConceptTree>(load_tree(cfg.tree));
  if (!cfg.questions.empty()) {
    data.bank = load_questions(cfg.questions, *data.tree, question_options(cfg));
  }
  data.stream = load_stream(cfg.stream, *data.tree, data.bank ? &*data.bank : nullptr);
  return data;
}

// First `per_student` responses of every student (all when zero), in order of
// first appearance in the stream.
std::vector<ObservationSet> burn_in_sets(const ConceptTree& tree,
                                         std::span<const StreamRecord> stream,
                                         std::size_t per_student) {
  std::vector<ObservationSet> out;
  for (const auto& [student, records] : group_by_student(stream)) {
    ObservationSet obs;
    const std::size_t k =
        per_student == 0 ? records.size() : std::min(per_student, records.size());
    for (std::size_t i = 0; i < k; ++i) obs.add(tree, records[i].interaction());
    out.push_back(std::move(obs));
  }
  return out;
}

int cmd_validate_tree(const RunConfig& cfg) {
  const auto records = parse_tree_records(read_file(cfg.tree));
  const auto report = validate_tree(records);
  if (!report.ok()) {
    std::cout << "invalid tree '" << cfg.tree << "'\n" << report.to_string();
    return kExitDomain;
  }
  const auto tree = ConceptTree::from_records(records);
  const auto stats = tree_stats(tree);
  std::cout << "ok: " << stats.nodes << " nodes, max depth " << stats.max_depth
            << ", " << stats.leaves << " leaves\n";
  return kExitOk;
}

int cmd_fit(const RunConfig& cfg) {
  const auto data = load_inputs(cfg);
  const auto sets = burn_in_sets(*data.tree, data.stream, cfg.burn_in);
  FitOptions opts;
  opts.max_iters = cfg.max_iters;
  opts.tol = cfg.tol;
  opts.threads = cfg.threads;
  const auto report =
      fit(*data.tree, DatasetView(std::span<const ObservationSet>(sets)),
          default_parameters(*data.tree), opts);
  const fs::path out(cfg.out);
  ensure_dir(out);
  write_file(out / "params.json", parameters_to_json(*data.tree, report.params));
  write_file(out / "fit_report.json", fit_report_to_json(*data.tree, report));
  std::cout << "students " << sets.size() << ", iterations " << report.iterations
            << (report.converged ? " (converged)" : " (not converged)")
            << ", log-likelihood " << std::setprecision(10)
            << (report.log_likelihood_trace.empty() ? 0.0 : report.log_likelihood_trace.back()) << '\n';
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  return kExitOk;
}

struct SimulateFlags {
  std::size_t nodes = 20;
  std::size_t students = 100;
  std::size_t interactions = 50;
  std::size_t per_leaf = 10;
  bool no_target = false;
  double ability_mean = 0.65;
  double ability_std = 0.15;
  std::string params;
};

int cmd_simulate(const RunConfig& cfg, const SimulateFlags& flags) {
  // Independent streams per artifact so that, e.g., changing the student
  // count leaves the tree and question bank unchanged.
  Rng tree_rng(derive_seed(cfg.seed, 0));
  Rng bank_rng(derive_seed(cfg.seed, 1));
  Rng param_rng(derive_seed(cfg.seed, 2));

  const ConceptTree tree =
      cfg.tree.empty() ? random_tree(flags.nodes, tree_rng) : load_tree(cfg.tree);
  const QuestionBank bank =
      cfg.questions.empty()
          ? make_question_bank(tree, flags.per_leaf, bank_rng)
          : load_questions(cfg.questions, tree, question_options(cfg));
  const Parameters theta =
      flags.params.empty() ? random_parameters(tree, param_rng)
                           : parameters_from_json(tree, read_file(flags.params));

  SimConfig sim;
  sim.n_students = flags.students;
  sim.interactions_per_student = flags.interactions;
  sim.target_ability = !flags.no_target;
  sim.ability_mean = flags.ability_mean;
  sim.ability_std = flags.ability_std;
  sim.seed = derive_seed(cfg.seed, 3);
  const auto room = generate_classroom(tree, theta, bank, sim);

  const fs::path out(cfg.out);
  ensure_dir(out);
  write_file(out / "tree.json", serialize_tree(tree));
  write_file(out / "questions.csv", questions_to_csv(tree, bank));
  write_file(out / "stream.jsonl", stream_to_jsonl(tree, room.stream));
  write_file(out / "truth.json", ground_truth_to_json(tree, room.truth));
  write_file(out / "theta_star.json", parameters_to_json(tree, theta));

  std::size_t correct = 0;
  for (const auto& r : room.stream) correct += r.correct ? 1 : 0;
  std::cout << "nodes " << tree.size() << ", questions " << bank.size()
            << ", students " << sim.n_students << ", interactions "
            << room.stream.size();
  if (!room.stream.empty()) {
    std::cout << ", correct rate " << std::fixed << std::setprecision(4)
              << static_cast<double>(correct) / static_cast<double>(room.stream.size());
  }
  std::cout << '\n';
  return kExitOk;
}

struct EvalFlags {
  std::size_t update_every = 1;
  bool no_personalize = false;
  std::string fixed_params;
};

int cmd_eval(const RunConfig& cfg, const EvalFlags& flags) {
  const auto data = load_inputs(cfg);
  if (cfg.burn_in == 0 && flags.fixed_params.empty()) {
    std::cerr << "error: --burn-in must be positive\n";
    return kExitDomain;
  }
  ExperimentConfig exp;
  exp.burn_in_count = cfg.burn_in;
  exp.threshold = cfg.threshold;
  exp.threads = cfg.threads;
  exp.online.fit.max_iters = cfg.max_iters;
  exp.online.fit.tol = cfg.tol;
  exp.online.fit.threads = cfg.threads;
  exp.online.update_every = flags.update_every;
  exp.online.personalize = !flags.no_personalize;

  const auto result =
      flags.fixed_params.empty()
          ? run_experiment(data.tree, data.stream, exp)
          : run_fixed_parameters(
                data.tree, data.stream,
                parameters_from_json(*data.tree, read_file(flags.fixed_params)), exp);

  const fs::path out(cfg.out);
  ensure_dir(out);
  write_file(out / "metrics.json", metrics_to_json(result.metrics));
  write_file(out / "predictions.jsonl", predictions_to_jsonl(result.records));
  write_file(out / "predictions.csv", predictions_to_csv(result.records));
  write_file(out / "burn_in_report.json", fit_report_to_json(*data.tree, result.burn_in));
  std::cout << metrics_table(result.metrics);
  return kExitOk;
}

struct OracleFlags {
  std::size_t instances = 200;
  std::size_t nodes = 8;
  std::size_t max_obs = 30;
};

int cmd_oracle_check(const RunConfig& cfg, const OracleFlags& flags) {
  std::optional<ConceptTree> fixed;
  if (!cfg.tree.empty()) fixed = load_tree(cfg.tree);
  const std::size_t n = fixed ? fixed->size() : flags.nodes;
  if (n == 0 || n > kMaxEnumerationNodes) {
    std::cerr << "error: oracle check needs 1.." << kMaxEnumerationNodes
              << " nodes, got " << n << '\n';
    return kExitDomain;
  }
  if (flags.instances == 0) {
    std::cerr << "warning: no instances requested; nothing was checked\n";
    return kExitOk;
  }
  double worst = 0.0;
  std::size_t worst_instance = 0;
  for (std::size_t i = 0; i < flags.instances; ++i) {
    Rng rng(derive_seed(cfg.seed, i));
    const ConceptTree tree = fixed ? *fixed : random_tree(n, rng);
    const auto params = random_parameters(tree, rng);
    const auto count = static_cast<std::size_t>(uniform01(rng) * (flags.max_obs + 1));
    const auto obs = random_observations(tree, std::min(count, flags.max_obs), rng);

    double dev = 0.0;
    try {
      const auto belief = posteriors(tree, params, obs);
      const auto exact = brute_force_posteriors(tree, params, obs);
      dev = std::abs(belief.log_likelihood - exact.log_likelihood);
      for (NodeIndex c = 0; c < tree.size(); ++c) {
        dev = std::max(dev, std::abs(belief.marginal[c] - exact.marginal[c]));
        if (tree.is_root(c)) continue;
        for (int s = 0; s < 4; ++s) {
          dev = std::max(dev, std::abs(belief.pairwise[c][s] - exact.pairwise[c][s]));
        }
      }
    } catch (const InferenceError&) {
      dev = std::numeric_limits<double>::infinity();
    }
    if (!(dev <= worst)) {
      worst = dev;
      worst_instance = i;
    }
  }
  const bool pass = worst < 1e-10;
  std::cout << (pass ? "PASS" : "FAIL") << ": " << flags.instances
            << " instances, max abs deviation " << std::scientific
            << std::setprecision(3) << worst << " (instance " << worst_instance
            << ")\n";
  return pass ? kExitOk : kExitDomain;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge tracing over a concept tree with a hidden Markov tree model"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_version_flag("--version", std::string(TREEKT_VERSION_STRING));

  RunConfig cfg;
  SimulateFlags sim;
  EvalFlags ev;
  OracleFlags oracle;

  auto* validate = app.add_subcommand("validate-tree", "check a concept tree file");
  validate->add_option("--tree", cfg.tree, "concept tree JSON")
      ->required()
      ->envname("TREEKT_TREE");

  auto* fitc = app.add_subcommand("fit", "fit parameters by EM on burn-in data");
  add_config_flag(*fitc);
  add_data_flags(*fitc, cfg, true);
  add_out_flag(*fitc, cfg);
  add_em_flags(*fitc, cfg);
  add_threads_flag(*fitc, cfg);
  add_seed_flag(*fitc, cfg);
  fitc->get_option("--burn-in")->description(
      "burn-in responses per student (0 uses every response)");

  auto* simc = app.add_subcommand("simulate", "generate a synthetic classroom");
  add_config_flag(*simc);
  simc->add_option("--tree", cfg.tree, "concept tree JSON (random tree if absent)")
      ->envname("TREEKT_TREE");
  simc->add_option("--questions", cfg.questions, "question metadata")
      ->envname("TREEKT_QUESTIONS");
  simc->add_option("--params", sim.params, "true parameters JSON (random if absent)");
  simc->add_option("--nodes", sim.nodes, "nodes of the random tree")
      ->capture_default_str()
      ->check(CLI::Range(std::size_t{1}, std::size_t{100000}));
  simc->add_option("--students", sim.students, "number of students")->capture_default_str();
  simc->add_option("--interactions", sim.interactions, "responses per student")
      ->capture_default_str();
  simc->add_option("--questions-per-leaf", sim.per_leaf,
                   "questions per leaf of a generated bank")
      ->capture_default_str();
  simc->add_flag("--no-target", sim.no_target,
                 "sample hidden states directly, without ability matching");
  simc->add_option("--ability-mean", sim.ability_mean, "mean target correctness")
      ->capture_default_str();
  simc->add_option("--ability-std", sim.ability_std, "spread of target correctness")
      ->capture_default_str();
  add_out_flag(*simc, cfg);
  add_seed_flag(*simc, cfg);
  add_threads_flag(*simc, cfg);
  simc->add_option("--bin-hi", cfg.bin_hi)->envname("TREEKT_BIN_HI");
  simc->add_option("--bin-lo", cfg.bin_lo)->envname("TREEKT_BIN_LO");

  auto* evalc = app.add_subcommand("eval", "burn-in fit, online replay and metrics");
  add_config_flag(*evalc);
  add_data_flags(*evalc, cfg, true);
  add_out_flag(*evalc, cfg);
  add_em_flags(*evalc, cfg);
  add_threads_flag(*evalc, cfg);
  add_seed_flag(*evalc, cfg);
  evalc->add_option("--threshold", cfg.threshold, "decision threshold for ACC and F1")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0))
      ->envname("TREEKT_THRESHOLD");
  evalc->add_option("--update-every", ev.update_every,
                    "responses between personalized EM steps")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  evalc->add_flag("--no-personalize", ev.no_personalize,
                  "keep the burn-in parameters for every student");
  evalc->add_option("--fixed-params", ev.fixed_params,
                    "predict with these parameters instead of fitting");

  auto* oraclec = app.add_subcommand(
      "oracle-check", "compare exact inference against brute-force enumeration");
  add_config_flag(*oraclec);
  oraclec->add_option("--instances", oracle.instances, "randomized instances")
      ->capture_default_str();
  oraclec->add_option("--nodes", oracle.nodes, "nodes per random tree")
      ->capture_default_str();
  oraclec->add_option("--max-obs", oracle.max_obs, "maximum responses per instance")
      ->capture_default_str();
  oraclec->add_option("--tree", cfg.tree, "use this tree instead of random ones")
      ->envname("TREEKT_TREE");
  add_seed_flag(*oraclec, cfg);

  try {
    app.parse(expand_config(app, argc, argv));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitEnvironment;
  }

  try {
    if (*validate) return cmd_validate_tree(cfg);
    if (*fitc) return cmd_fit(cfg);
    if (*simc) return cmd_simulate(cfg, sim);
    if (*evalc) return cmd_eval(cfg, ev);
    if (*oraclec) return cmd_oracle_check(cfg, oracle);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitEnvironment;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitEnvironment;
  } catch (const TreeError& e) {
    std::cerr << "error: invalid tree\n" << e.report().to_string();
    return kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDomain;
  }
  return kExitOk;
}

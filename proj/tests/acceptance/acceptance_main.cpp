// Release gate for the refinement pipeline. Each criterion prints exactly one
// line: [PASS]/[FAIL]/[SKIP] followed by its number, a short description, and
// a detail. The process exits nonzero if any required criterion fails; the
// live-endpoint comparison is recorded only and never gates.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "msmi/corpus.hpp"
#include "msmi/discriminator.hpp"
#include "msmi/engine.hpp"
#include "msmi/generator.hpp"
#include "msmi/math.hpp"
#include "msmi/metrics.hpp"
#include "msmi/random.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  char status = 'F';  // 'P', 'F', 'S'
  std::string detail;
};

Outcome pass(std::string detail) { return {'P', std::move(detail)}; }
Outcome fail(std::string detail) { return {'F', std::move(detail)}; }
Outcome skip(std::string detail) { return {'S', std::move(detail)}; }

std::string format_double(const char* fmt, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, value);
  return buf;
}

// ---------------------------------------------------------------------------
// Subprocess plumbing shared by the CLI-level criteria.

struct CliRun {
  int exit_code = -1;
  std::string out;
  std::string err;
};

CliRun run_cli(const std::vector<std::string>& args, const msmi_test::TempDir& scratch) {
  static int counter = 0;
  const std::string out_path = scratch.file("stdout-" + std::to_string(counter));
  const std::string err_path = scratch.file("stderr-" + std::to_string(counter));
  ++counter;

  std::string command = std::string("'") + MSMI_CLI_PATH + "'";
  for (const std::string& arg : args) {
    command += " '" + arg + "'";
  }
  command += " >'" + out_path + "' 2>'" + err_path + "'";

  const int status = std::system(command.c_str());
  CliRun run;
  run.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  run.out = msmi_test::read_text_file(out_path);
  run.err = msmi_test::read_text_file(err_path);
  return run;
}

std::string word_config(const std::string& corpus_path, const std::string& extra = "") {
  return "[run]\nseed = 42\n\n[corpus]\npath = \"" + corpus_path +
         "\"\n\n[tokenizer]\nmode = \"word\"\n\n[train]\nmin_doc_freq = 1\n" + extra;
}

// ---------------------------------------------------------------------------
// Criterion 1: train on a 200-document synthetic corpus through the CLI and
// reach validation accuracy >= 0.95 in under a minute.

Outcome criterion_training() {
  msmi_test::TempDir dir;
  const std::string corpus_path = dir.file("corpus.jsonl");
  msmi::save_corpus(msmi_test::synthetic_corpus(200, 20260824), corpus_path);
  msmi_test::write_text_file(dir.file("run.toml"), word_config(corpus_path));

  const auto started = std::chrono::steady_clock::now();
  const CliRun run =
      run_cli({"train", "--config", dir.file("run.toml"), "--out", dir.file("out")}, dir);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  if (run.exit_code != 0) {
    return fail("train exited with " + std::to_string(run.exit_code) + ": " + run.err);
  }
  const std::string needle = "validation accuracy: ";
  const std::size_t pos = run.out.find(needle);
  if (pos == std::string::npos) {
    return fail("missing validation accuracy in train output");
  }
  const double accuracy = std::stod(run.out.substr(pos + needle.size()));
  if (accuracy < 0.95) {
    return fail("validation accuracy " + format_double("%.6f", accuracy) + " < 0.95");
  }
  if (seconds >= 60.0) {
    return fail("training took " + format_double("%.1f", seconds) + " s (budget 60 s)");
  }
  if (!fs::exists(dir.file("out") + "/model.bin")) {
    return fail("model.bin was not written");
  }
  return pass("validation accuracy " + format_double("%.6f", accuracy) + " in " +
              format_double("%.3f", seconds) + " s");
}

// ---------------------------------------------------------------------------
// Criterion 2: with the logistic keyword oracle and a one-keyword-per-call
// script, the iterative strategy succeeds on every document at iteration 2
// while the single-pass baseline succeeds on none.

Outcome criterion_loop_beats_single_pass() {
  std::mt19937_64 rng(msmi::derive_seed(20260824, "loop-vs-single"));
  msmi::Corpus corpus;
  corpus.label_names = {"unreasonable", "reasonable"};
  for (int i = 0; i < 10; ++i) {
    msmi::Record rec;
    rec.id = "case-" + std::to_string(i);
    rec.claim = msmi_test::synthetic_claim(rng, 0, 6 + msmi::bounded_uniform(rng, 6));
    rec.label = 0;
    rec.raw_label = msmi::RawLabel::Unreasonable;
    corpus.records.push_back(std::move(rec));
  }

  const msmi_test::KeywordLogisticOracle oracle("zkw");
  msmi::GeneratorConfig gen_config;
  gen_config.kind = msmi::GeneratorKind::Mock;
  gen_config.mock_script = {"zkw", "zkw", "zkw", "zkw", "zkw"};
  msmi::MockGeneratorFactory factory(gen_config);

  msmi::EngineConfig cfg;
  cfg.threshold = 0.5;
  cfg.max_iterations = 5;
  cfg.goal = msmi::AttackGoal::targeted(1);

  cfg.strategy = msmi::Strategy::Msmi;
  const auto iterative = msmi::run_batch(corpus, oracle, factory, cfg, 1);
  cfg.strategy = msmi::Strategy::Prompt;
  const auto single = msmi::run_batch(corpus, oracle, factory, cfg, 1);

  const double iterative_rate = msmi::success_rate(iterative);
  const double single_rate = msmi::success_rate(single);
  if (single_rate != 0.0) {
    return fail("single-pass success rate " + format_double("%.2f", single_rate) +
                "% (expected exactly 0.00%)");
  }
  if (iterative_rate != 100.0) {
    return fail("iterative success rate " + format_double("%.2f", iterative_rate) +
                "% (expected exactly 100.00%)");
  }
  for (const auto& result : iterative) {
    if (!result.success || result.trace.iterations.size() != 2) {
      return fail("document " + result.trace.doc_id + " did not succeed at iteration 2");
    }
    if (result.trace.stop_reason != msmi::StopReason::ThresholdMet) {
      return fail("document " + result.trace.doc_id + " stopped for the wrong reason");
    }
  }
  return pass("single-pass 0.00% vs iterative 100.00%, all successes at iteration 2");
}

// ---------------------------------------------------------------------------
// Criterion 3: loop invariants over randomized configurations.

class CountingScriptedGenerator final : public msmi::Generator {
 public:
  CountingScriptedGenerator(std::string base, std::vector<std::string> script, int& calls)
      : candidate_(std::move(base)), script_(std::move(script)), calls_(calls) {}

  msmi::GenerationResult generate(const msmi::PromptBundle&) override {
    ++calls_;
    if (next_ < script_.size()) {
      if (!candidate_.empty() && !script_[next_].empty()) candidate_ += ' ';
      candidate_ += script_[next_];
      ++next_;
    }
    return {candidate_, 0};
  }

 private:
  std::string candidate_;
  std::vector<std::string> script_;
  std::size_t next_ = 0;
  int& calls_;
};

Outcome criterion_loop_invariants() {
  const int kRuns = 1000;
  std::mt19937_64 rng(msmi::derive_seed(20260824, "invariants"));
  std::uniform_real_distribution<double> threshold_dist(0.05, 0.95);
  const msmi_test::KeywordLogisticOracle oracle("zkw");

  int checked = 0;
  for (int run = 0; run < kRuns; ++run) {
    // Random document: filler words plus 0..4 keyword occurrences.
    const int initial_keywords = static_cast<int>(msmi::bounded_uniform(rng, 5));
    std::vector<std::string> words;
    const std::size_t n_filler = 3 + msmi::bounded_uniform(rng, 6);
    for (std::size_t i = 0; i < n_filler; ++i) {
      const auto& pool = msmi_test::class0_words();
      words.push_back(pool[msmi::bounded_uniform(rng, pool.size())]);
    }
    for (int i = 0; i < initial_keywords; ++i) words.push_back("zkw");
    std::shuffle(words.begin(), words.end(), rng);
    msmi::Record doc;
    doc.id = "run-" + std::to_string(run);
    doc.label = initial_keywords >= 2 ? 1 : 0;
    for (const std::string& w : words) {
      if (!doc.claim.empty()) doc.claim += ' ';
      doc.claim += w;
    }

    // Random engine configuration.
    msmi::EngineConfig cfg;
    cfg.max_iterations = 1 + static_cast<int>(msmi::bounded_uniform(rng, 6));
    cfg.threshold = threshold_dist(rng);
    cfg.strategy = msmi::bounded_uniform(rng, 5) == 0 ? msmi::Strategy::Prompt
                                                      : msmi::Strategy::Msmi;
    cfg.embed_full_history = msmi::bounded_uniform(rng, 2) == 0;
    switch (msmi::bounded_uniform(rng, 3)) {
      case 0: cfg.goal = msmi::AttackGoal::targeted(0); break;
      case 1: cfg.goal = msmi::AttackGoal::targeted(1); break;
      default: cfg.goal = msmi::AttackGoal::untargeted(); break;
    }

    // Random script; may be shorter than the budget (calls then echo the
    // last candidate) or carry empty phrases.
    std::vector<std::string> script;
    const std::size_t script_len = msmi::bounded_uniform(rng, 9);
    for (std::size_t i = 0; i < script_len; ++i) {
      std::string phrase;
      const int kw = static_cast<int>(msmi::bounded_uniform(rng, 4));
      for (int k = 0; k < kw; ++k) {
        if (!phrase.empty()) phrase += ' ';
        phrase += "zkw";
      }
      if (msmi::bounded_uniform(rng, 2) == 0) {
        if (!phrase.empty()) phrase += ' ';
        phrase += "settled";
      }
      script.push_back(phrase);
    }

    int calls = 0;
    CountingScriptedGenerator generator(doc.claim, script, calls);
    const msmi::RefinementResult result = msmi::refine(doc, oracle, generator, cfg);
    const auto& trace = result.trace;
    const int original_prediction = trace.original_verdict.predicted;
    const bool untargeted = cfg.goal.kind == msmi::AttackGoal::Kind::Untargeted;

    const auto describe = [&](const std::string& what) {
      return fail("run " + std::to_string(run) + ": " + what +
                  " (strategy=" + msmi::to_string(cfg.strategy) +
                  ", max_iterations=" + std::to_string(cfg.max_iterations) +
                  ", threshold=" + format_double("%.3f", cfg.threshold) + ")");
    };

    // Generator call accounting and the iteration budget.
    if (calls != static_cast<int>(trace.iterations.size())) {
      return describe("generator calls != recorded iterations");
    }
    const int budget = cfg.strategy == msmi::Strategy::Prompt ? 1 : cfg.max_iterations;
    if (static_cast<int>(trace.iterations.size()) > budget) {
      return describe("iteration budget exceeded");
    }
    if (trace.stop_reason == msmi::StopReason::GeneratorError) {
      return describe("unexpected generator error: " + trace.error_message);
    }

    // Scores in the trace must be recomputable from the verdicts, and the
    // verdicts from the candidate texts.
    const auto crossed_at = [&](const msmi::IterationRecord& it) {
      if (it.goal_score < cfg.threshold) return false;
      if (untargeted && it.verdict.predicted == original_prediction) return false;
      return true;
    };
    for (const auto& it : trace.iterations) {
      const msmi::Verdict rescored = oracle.score(it.candidate_text);
      if (rescored.probabilities != it.verdict.probabilities ||
          rescored.predicted != it.verdict.predicted) {
        return describe("stored verdict does not match a fresh scoring");
      }
      if (msmi::goal_score(it.verdict, cfg.goal, original_prediction) != it.goal_score) {
        return describe("stored goal score does not match its verdict");
      }
    }

    if (trace.stop_reason == msmi::StopReason::ThresholdMet) {
      if (!result.success) return describe("threshold met but success flag clear");
      if (trace.iterations.empty()) return describe("threshold met without iterations");
      const auto& last = trace.iterations.back();
      if (!crossed_at(last)) return describe("stop iteration does not cross the threshold");
      for (std::size_t i = 0; i + 1 < trace.iterations.size(); ++i) {
        if (crossed_at(trace.iterations[i])) {
          return describe("an earlier iteration already crossed (not first-crossing)");
        }
      }
      if (result.output_text != last.candidate_text ||
          result.output_goal_score != last.goal_score) {
        return describe("success output is not the crossing candidate");
      }
    } else {
      if (result.success) return describe("success flag set without threshold_met");
      for (const auto& it : trace.iterations) {
        if (crossed_at(it)) return describe("a crossing iteration was not stopped on");
      }
      if (static_cast<int>(trace.iterations.size()) != budget) {
        return describe("failure finished before exhausting the budget");
      }
      // Failure output = argmax goal score, earliest tie, brute-forced.
      std::size_t best = 0;
      for (std::size_t i = 1; i < trace.iterations.size(); ++i) {
        if (trace.iterations[i].goal_score > trace.iterations[best].goal_score) best = i;
      }
      if (result.output_text != trace.iterations[best].candidate_text ||
          result.output_goal_score != trace.iterations[best].goal_score) {
        return describe("failure output is not the best-scoring candidate");
      }
    }
    if (result.success != (trace.stop_reason == msmi::StopReason::ThresholdMet)) {
      return describe("success flag and stop reason disagree");
    }
    ++checked;
  }
  return pass(std::to_string(checked) + "/" + std::to_string(kRuns) +
              " randomized runs upheld every invariant");
}

// ---------------------------------------------------------------------------
// Criterion 4: numerical identities.

Outcome criterion_numerics() {
  std::mt19937_64 rng(msmi::derive_seed(20260824, "numerics"));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  // (a) Analytic gradient vs central finite differences, 3 classes x 4 dims
  // over 5 documents.
  const int classes = 3;
  const int dims = 4;
  Eigen::MatrixXd weights(classes, dims);
  Eigen::VectorXd bias(classes);
  for (int k = 0; k < classes; ++k) {
    bias(k) = unit(rng);
    for (int v = 0; v < dims; ++v) weights(k, v) = unit(rng);
  }
  std::vector<msmi::SparseVec> inputs;
  std::vector<int> labels;
  for (int d = 0; d < 5; ++d) {
    msmi::SparseVec x(dims);
    const int nonzeros = 2 + static_cast<int>(msmi::bounded_uniform(rng, 2));
    for (int j = 0; j < nonzeros; ++j) {
      x.coeffRef(static_cast<int>(msmi::bounded_uniform(rng, dims))) = unit(rng);
    }
    inputs.push_back(x);
    labels.push_back(static_cast<int>(msmi::bounded_uniform(rng, classes)));
  }
  const double lambda = 1e-3;
  const msmi::LossGrad analytic =
      msmi::regularized_cross_entropy(weights, bias, inputs, labels, lambda);
  const double step = 1e-5;
  double max_rel = 0.0;
  const auto relative = [](double got, double fd) {
    return std::abs(got - fd) / std::max({std::abs(got), std::abs(fd), 1e-8});
  };
  for (int k = 0; k < classes; ++k) {
    for (int v = 0; v < dims; ++v) {
      Eigen::MatrixXd w_plus = weights, w_minus = weights;
      w_plus(k, v) += step;
      w_minus(k, v) -= step;
      const double fd = (msmi::regularized_cross_entropy(w_plus, bias, inputs, labels, lambda).loss -
                         msmi::regularized_cross_entropy(w_minus, bias, inputs, labels, lambda).loss) /
                        (2.0 * step);
      max_rel = std::max(max_rel, relative(analytic.grad_weights(k, v), fd));
    }
    Eigen::VectorXd b_plus = bias, b_minus = bias;
    b_plus(k) += step;
    b_minus(k) -= step;
    const double fd = (msmi::regularized_cross_entropy(weights, b_plus, inputs, labels, lambda).loss -
                       msmi::regularized_cross_entropy(weights, b_minus, inputs, labels, lambda).loss) /
                      (2.0 * step);
    max_rel = std::max(max_rel, relative(analytic.grad_bias(k), fd));
  }
  if (max_rel > 1e-4) {
    return fail("gradient relative error " + format_double("%.2e", max_rel) + " > 1e-4");
  }

  // (b) Verdict probabilities sum to 1 within 1e-9 on a trained model.
  msmi::TrainConfig train_config;
  train_config.seed = 11;
  train_config.min_doc_freq = 1;
  msmi::TokenizerConfig tokenizer;
  tokenizer.mode = msmi::TokenizerMode::Word;
  const msmi::DiscriminatorModel model =
      msmi::train_classifier(msmi_test::synthetic_corpus(80, 5), msmi_test::synthetic_corpus(20, 6),
                             train_config, tokenizer);
  double max_sum_error = 0.0;
  for (int i = 0; i < 100; ++i) {
    std::string text = msmi_test::synthetic_claim(rng, static_cast<int>(i % 2), 5);
    if (i % 3 == 0) text += " zzqx";  // out-of-vocabulary tail
    const msmi::Verdict verdict = model.score(text);
    if (verdict.probabilities.minCoeff() < 0.0) {
      return fail("negative probability from the trained model");
    }
    max_sum_error = std::max(max_sum_error, std::abs(verdict.probabilities.sum() - 1.0));
  }
  if (max_sum_error > 1e-9) {
    return fail("verdict sum deviates by " + format_double("%.2e", max_sum_error) + " > 1e-9");
  }

  // (c) Cosine identities.
  double max_cosine_error = 0.0;
  for (int i = 0; i < 50; ++i) {
    Eigen::VectorXd a(12), b(12);
    for (int j = 0; j < 12; ++j) {
      a(j) = unit(rng);
      b(j) = unit(rng);
    }
    if (a.norm() == 0.0 || b.norm() == 0.0) continue;
    max_cosine_error = std::max(max_cosine_error, std::abs(msmi::cosine_similarity(a, a) - 1.0));
    for (const double scale : {1e-6, 3.7, 2.5e5}) {
      max_cosine_error = std::max(
          max_cosine_error,
          std::abs(msmi::cosine_similarity(a, b) - msmi::cosine_similarity(a, (scale * b).eval())));
    }
  }
  if (max_cosine_error > 1e-12) {
    return fail("cosine identity error " + format_double("%.2e", max_cosine_error) + " > 1e-12");
  }

  return pass("gradient " + format_double("%.1e", max_rel) + " rel, verdict sums " +
              format_double("%.1e", max_sum_error) + ", cosine " +
              format_double("%.1e", max_cosine_error));
}

// ---------------------------------------------------------------------------
// Criterion 5: exact metric arithmetic on constructed result sets.

class ContainsWordScorer final : public msmi::Scorer {
 public:
  msmi::Verdict score(std::string_view text) const override {
    const bool hit = text.find("valid") != std::string_view::npos;
    return msmi::make_verdict(Eigen::Vector2d(hit ? 0.1 : 0.9, hit ? 0.9 : 0.1));
  }
};

Outcome criterion_metric_arithmetic() {
  const auto make_result = [](int index, bool success, const std::string& output) {
    msmi::RefinementResult r;
    r.trace.doc_id = "m-" + std::to_string(index);
    r.trace.true_label = 1;
    r.success = success;
    r.output_text = output;
    return r;
  };

  // 47 successes out of 1000 attempts: exactly 4.7 percent.
  std::vector<msmi::RefinementResult> batch;
  for (int i = 0; i < 1000; ++i) {
    batch.push_back(make_result(i, i < 47, i < 47 ? "kept valid wording" : "reworded claim"));
  }
  if (msmi::success_rate(batch) != 4.7) {
    return fail("success rate for 47/1000 is not exactly 4.7");
  }

  // The 47 outputs that kept the keyword stay correctly classified; the rest
  // flipped. Accuracy and flip rate must sum to exactly 100.
  const ContainsWordScorer scorer;
  const double accuracy = msmi::adversarial_accuracy(scorer, batch);
  if (accuracy != 4.7) {
    return fail("adversarial accuracy is " + format_double("%.6f", accuracy) +
                ", expected exactly 4.7");
  }
  int flipped = 0;
  for (const auto& r : batch) {
    if (scorer.score(r.output_text).predicted != *r.trace.true_label) ++flipped;
  }
  const double flip_rate = 100.0 * flipped / static_cast<double>(batch.size());
  if (flip_rate != 95.3) {
    return fail("flip rate is not exactly 95.3");
  }
  if (accuracy + flip_rate != 100.0) {
    return fail("accuracy + flip rate is not exactly 100");
  }

  // Small exact fractions.
  std::vector<msmi::RefinementResult> quarter;
  for (int i = 0; i < 4; ++i) quarter.push_back(make_result(i, i == 0, "text"));
  if (msmi::success_rate(quarter) != 25.0) {
    return fail("success rate for 1/4 is not exactly 25.0");
  }
  std::vector<msmi::RefinementResult> none = {make_result(0, false, "text")};
  std::vector<msmi::RefinementResult> all = {make_result(0, true, "text")};
  if (msmi::success_rate(none) != 0.0 || msmi::success_rate(all) != 100.0) {
    return fail("degenerate success rates are not exact");
  }
  return pass("4.7 / 95.3 / 100.0 / 25.0 all exact");
}

// ---------------------------------------------------------------------------
// Criterion 6: byte-identical artifacts across reruns.

Outcome criterion_determinism() {
  msmi_test::TempDir dir;
  const std::string corpus_path = dir.file("corpus.jsonl");
  msmi::save_corpus(msmi_test::synthetic_corpus(60, 17), corpus_path);
  const std::string extra =
      "\n[engine]\nmax_iterations = 3\n"
      "\n[generator]\nkind = \"mock\"\n"
      "script = [\"agreed resolved documented\", \"refunded promptly\", \"reasonable valid\"]\n";
  msmi_test::write_text_file(dir.file("run.toml"), word_config(corpus_path, extra));

  const std::string out_a = dir.file("a");
  const std::string out_b = dir.file("b");
  for (const std::string& out : {out_a, out_b}) {
    const CliRun train =
        run_cli({"train", "--config", dir.file("run.toml"), "--out", out}, dir);
    if (train.exit_code != 0) return fail("train failed: " + train.err);
    const CliRun refine =
        run_cli({"refine", "--config", dir.file("run.toml"), "--out", out}, dir);
    if (refine.exit_code != 0) return fail("refine failed: " + refine.err);
  }
  if (msmi_test::read_text_file(out_a + "/traces.jsonl") !=
      msmi_test::read_text_file(out_b + "/traces.jsonl")) {
    return fail("traces.jsonl differs between identical runs");
  }
  if (msmi_test::read_text_file(out_a + "/report.json") !=
      msmi_test::read_text_file(out_b + "/report.json")) {
    return fail("report.json differs between identical runs");
  }

  // Rerunning from the snapshot the first run wrote must also reproduce it.
  const std::string out_c = dir.file("c");
  const CliRun snapshot =
      run_cli({"refine", "--config", out_a + "/config.resolved.toml", "--out", out_c}, dir);
  if (snapshot.exit_code != 0) return fail("snapshot rerun failed: " + snapshot.err);
  if (msmi_test::read_text_file(out_a + "/traces.jsonl") !=
          msmi_test::read_text_file(out_c + "/traces.jsonl") ||
      msmi_test::read_text_file(out_a + "/report.json") !=
          msmi_test::read_text_file(out_c + "/report.json")) {
    return fail("snapshot rerun produced different artifacts");
  }
  return pass("fresh rerun and snapshot rerun are both byte-identical");
}

// ---------------------------------------------------------------------------
// Criterion 7 (optional, never gates): directional comparison against a live
// chat endpoint, recorded only.

Outcome criterion_live_endpoint() {
  const char* endpoint = std::getenv("MSMI_LIVE_ENDPOINT");
  if (endpoint == nullptr || *endpoint == '\0') {
    return skip("set MSMI_LIVE_ENDPOINT (and optionally MSMI_LIVE_MODEL, "
                "MSMI_LIVE_API_KEY_ENV) to record this comparison");
  }
  try {
    msmi::TrainConfig train_config;
    train_config.seed = 11;
    train_config.min_doc_freq = 1;
    msmi::TokenizerConfig tokenizer;
    tokenizer.mode = msmi::TokenizerMode::Word;
    const msmi::DiscriminatorModel model =
        msmi::train_classifier(msmi_test::synthetic_corpus(120, 5),
                               msmi_test::synthetic_corpus(30, 6), train_config, tokenizer);

    msmi::Corpus sample;
    sample.label_names = {"unreasonable", "reasonable"};
    std::mt19937_64 rng(msmi::derive_seed(20260824, "live"));
    for (int i = 0; i < 50; ++i) {
      msmi::Record rec;
      rec.id = "live-" + std::to_string(i);
      rec.claim = msmi_test::synthetic_claim(rng, 0, 10);
      rec.label = 0;
      rec.raw_label = msmi::RawLabel::Unreasonable;
      sample.records.push_back(std::move(rec));
    }

    msmi::GeneratorConfig gen_config;
    gen_config.kind = msmi::GeneratorKind::ChatEndpoint;
    gen_config.endpoint_url = endpoint;
    const char* model_name = std::getenv("MSMI_LIVE_MODEL");
    gen_config.model_name = model_name != nullptr ? model_name : "gpt-3.5-turbo";
    const char* key_env = std::getenv("MSMI_LIVE_API_KEY_ENV");
    if (key_env != nullptr) gen_config.api_key_env = key_env;
    auto factory = msmi::make_generator_factory(gen_config);
    factory->preflight();

    msmi::EngineConfig cfg;
    cfg.goal = msmi::AttackGoal::targeted(1);
    cfg.max_iterations = 3;
    cfg.strategy = msmi::Strategy::Msmi;
    const double iterative = msmi::success_rate(msmi::run_batch(sample, model, *factory, cfg, 4));
    cfg.strategy = msmi::Strategy::Prompt;
    const double single = msmi::success_rate(msmi::run_batch(sample, model, *factory, cfg, 4));
    return pass("recorded: iterative " + format_double("%.2f", iterative) +
                "% vs single-pass " + format_double("%.2f", single) + "%");
  } catch (const std::exception& error) {
    return skip(std::string("endpoint unusable: ") + error.what());
  }
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* description;
    Outcome (*run)();
    bool required;
  };
  const std::vector<Criterion> criteria = {
      {1, "offline end-to-end training", criterion_training, true},
      {2, "iterative loop beats single-pass on the keyword oracle",
       criterion_loop_beats_single_pass, true},
      {3, "loop invariants over randomized runs", criterion_loop_invariants, true},
      {4, "numerical identities (gradient, verdict sums, cosine)", criterion_numerics, true},
      {5, "exact metric arithmetic", criterion_metric_arithmetic, true},
      {6, "byte-identical reruns from one configuration", criterion_determinism, true},
      {7, "live endpoint directional comparison", criterion_live_endpoint, false},
  };

  bool all_required_pass = true;
  for (const Criterion& criterion : criteria) {
    Outcome outcome;
    try {
      outcome = criterion.run();
    } catch (const std::exception& error) {
      outcome = fail(std::string("unhandled error: ") + error.what());
    }
    const char* tag = outcome.status == 'P' ? "[PASS]" : outcome.status == 'S' ? "[SKIP]" : "[FAIL]";
    std::printf("%s %d %s (%s)\n", tag, criterion.number, criterion.description,
                outcome.detail.c_str());
    if (criterion.required && outcome.status != 'P') {
      all_required_pass = false;
    }
  }
  return all_required_pass ? 0 : 1;
}

#include "msmi/engine.hpp"

#include <atomic>
#include <thread>

#include "msmi/errors.hpp"

namespace msmi {
namespace {

void validate_config(const EngineConfig& cfg) {
  if (!(cfg.threshold > 0.0 && cfg.threshold < 1.0)) {
    throw ConfigError("threshold must lie strictly between 0 and 1");
  }
  if (cfg.max_iterations < 1) {
    throw ConfigError("max_iterations must be >= 1");
  }
  if (cfg.goal.kind == AttackGoal::Kind::Targeted && cfg.goal.target_class < 0) {
    throw ConfigError("targeted goal needs a non-negative class index");
  }
}

/// Threshold crossing; untargeted goals additionally require the argmax to
/// have moved off the original prediction.
bool crossed(double score, const Verdict& v, const EngineConfig& cfg, int original_prediction) {
  if (score < cfg.threshold) return false;
  if (cfg.goal.kind == AttackGoal::Kind::Untargeted && v.predicted == original_prediction) {
    return false;
  }
  return true;
}

/// Argmax goal_score over the trace, earliest tie; no candidates → original.
void select_failure_output(RefinementResult& result) {
  result.success = false;
  if (result.trace.iterations.empty()) {
    result.output_text = result.trace.original_text;
    result.output_goal_score = result.trace.original_goal_score;
    return;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.trace.iterations.size(); ++i) {
    if (result.trace.iterations[i].goal_score > result.trace.iterations[best].goal_score) {
      best = i;
    }
  }
  result.output_text = result.trace.iterations[best].candidate_text;
  result.output_goal_score = result.trace.iterations[best].goal_score;
}

RefinementResult start_trace(const Record& doc, const Scorer& m, const EngineConfig& cfg) {
  RefinementResult result;
  result.trace.doc_id = doc.id;
  result.trace.original_text = doc.claim;
  result.trace.true_label = doc.label;
  result.trace.original_verdict = m.score(doc.claim);
  result.trace.original_goal_score =
      goal_score(result.trace.original_verdict, cfg.goal, result.trace.original_verdict.predicted);
  return result;
}

}  // namespace

AttackGoal AttackGoal::targeted(int class_index) {
  AttackGoal goal;
  goal.kind = Kind::Targeted;
  goal.target_class = class_index;
  return goal;
}

AttackGoal AttackGoal::untargeted() { return AttackGoal{}; }

std::string to_string(Strategy strategy) {
  return strategy == Strategy::Msmi ? "msmi" : "prompt";
}

Strategy parse_strategy(const std::string& text) {
  if (text == "msmi") return Strategy::Msmi;
  if (text == "prompt") return Strategy::Prompt;
  throw ConfigError("unknown strategy \"" + text + "\", expected msmi or prompt");
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::ThresholdMet: return "threshold_met";
    case StopReason::BudgetExhausted: return "budget_exhausted";
    case StopReason::GeneratorError: return "generator_error";
  }
  return "budget_exhausted";
}

StopReason parse_stop_reason(const std::string& text) {
  if (text == "threshold_met") return StopReason::ThresholdMet;
  if (text == "budget_exhausted") return StopReason::BudgetExhausted;
  if (text == "generator_error") return StopReason::GeneratorError;
  throw DataError("unknown stop reason \"" + text + "\"");
}

double goal_score(const Verdict& v, const AttackGoal& goal, int original_prediction) {
  if (goal.kind == AttackGoal::Kind::Targeted) {
    if (goal.target_class < 0 || goal.target_class >= v.probabilities.size()) {
      throw DataError("target class " + std::to_string(goal.target_class) +
                      " outside the verdict's " + std::to_string(v.probabilities.size()) +
                      " classes");
    }
    return v.probabilities(goal.target_class);
  }
  if (original_prediction < 0 || original_prediction >= v.probabilities.size()) {
    throw DataError("original prediction outside the verdict's class range");
  }
  return 1.0 - v.probabilities(original_prediction);
}

RefinementResult refine_msmi(const Record& doc, const Scorer& m, Generator& g,
                             const EngineConfig& cfg) {
  validate_config(cfg);
  RefinementResult result = start_trace(doc, m, cfg);
  const int original_prediction = result.trace.original_verdict.predicted;

  std::string last_candidate;
  double before_last = result.trace.original_goal_score;
  double last_score = result.trace.original_goal_score;
  std::vector<HistoryItem> history;

  for (int i = 1; i <= cfg.max_iterations; ++i) {
    PromptBundle prompt;
    try {
      if (i == 1) {
        prompt = build_initial_prompt(doc, cfg.task, cfg.templates);
      } else {
        const FeedbackCue cue = make_feedback_cue(before_last, last_score);
        prompt = build_feedback_prompt(doc, last_candidate, cue, cfg.task, cfg.templates,
                                       cfg.embed_full_history ? &history : nullptr);
        result.trace.iterations.back().feedback_sent = true;
        history.push_back({last_candidate, cue_sentence(cue)});
      }
      const GenerationResult generated = g.generate(prompt);
      const Verdict verdict = m.score(generated.text);
      const double score = goal_score(verdict, cfg.goal, original_prediction);

      IterationRecord record;
      record.candidate_text = generated.text;
      record.verdict = verdict;
      record.goal_score = score;
      record.generator_retries = generated.retries;
      result.trace.iterations.push_back(std::move(record));

      if (crossed(score, result.trace.iterations.back().verdict, cfg, original_prediction)) {
        result.trace.stop_reason = StopReason::ThresholdMet;
        result.success = true;
        result.output_text = result.trace.iterations.back().candidate_text;
        result.output_goal_score = score;
        return result;
      }
      before_last = last_score;
      last_score = score;
      last_candidate = result.trace.iterations.back().candidate_text;
    } catch (const std::exception& error) {
      result.trace.stop_reason = StopReason::GeneratorError;
      result.trace.error_message = error.what();
      select_failure_output(result);
      return result;
    }
  }

  result.trace.stop_reason = StopReason::BudgetExhausted;
  select_failure_output(result);
  return result;
}

RefinementResult refine_single_pass(const Record& doc, const Scorer& m, Generator& g,
                                    const EngineConfig& cfg) {
  validate_config(cfg);
  RefinementResult result = start_trace(doc, m, cfg);
  const int original_prediction = result.trace.original_verdict.predicted;

  try {
    const PromptBundle prompt = build_initial_prompt(doc, cfg.task, cfg.templates);
    const GenerationResult generated = g.generate(prompt);
    const Verdict verdict = m.score(generated.text);
    const double score = goal_score(verdict, cfg.goal, original_prediction);

    IterationRecord record;
    record.candidate_text = generated.text;
    record.verdict = verdict;
    record.goal_score = score;
    record.generator_retries = generated.retries;
    result.trace.iterations.push_back(std::move(record));

    if (crossed(score, verdict, cfg, original_prediction)) {
      result.trace.stop_reason = StopReason::ThresholdMet;
      result.success = true;
      result.output_text = result.trace.iterations.back().candidate_text;
      result.output_goal_score = score;
    } else {
      result.trace.stop_reason = StopReason::BudgetExhausted;
      select_failure_output(result);
    }
  } catch (const std::exception& error) {
    result.trace.stop_reason = StopReason::GeneratorError;
    result.trace.error_message = error.what();
    select_failure_output(result);
  }
  return result;
}

RefinementResult refine(const Record& doc, const Scorer& m, Generator& g,
                        const EngineConfig& cfg) {
  return cfg.strategy == Strategy::Msmi ? refine_msmi(doc, m, g, cfg)
                                        : refine_single_pass(doc, m, g, cfg);
}

bool is_eligible(const Verdict& original, int true_label, const AttackGoal& goal) {
  if (goal.kind == AttackGoal::Kind::Targeted) {
    return original.predicted != goal.target_class;
  }
  return original.predicted == true_label;
}

std::vector<RefinementResult> run_batch(const Corpus& corpus, const Scorer& m,
                                        GeneratorFactory& generators, const EngineConfig& cfg,
                                        int parallelism) {
  validate_config(cfg);
  if (parallelism < 1) {
    throw ConfigError("parallelism must be >= 1");
  }

  const std::size_t n = corpus.size();
  std::vector<std::optional<RefinementResult>> slots(n);
  std::atomic<std::size_t> next{0};

  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      const Record& doc = corpus.records[i];
      try {
        const Verdict original = m.score(doc.claim);
        if (!is_eligible(original, doc.label, cfg.goal)) {
          continue;
        }
        auto generator = generators.create(doc);
        slots[i] = refine(doc, m, *generator, cfg);
      } catch (const std::exception& error) {
        // Isolate the failure into this document's result.
        RefinementResult failed;
        failed.trace.doc_id = doc.id;
        failed.trace.original_text = doc.claim;
        failed.trace.true_label = doc.label;
        failed.trace.stop_reason = StopReason::GeneratorError;
        failed.trace.error_message = error.what();
        failed.output_text = doc.claim;
        slots[i] = std::move(failed);
      }
    }
  };

  const std::size_t thread_count = std::min<std::size_t>(static_cast<std::size_t>(parallelism), n);
  if (thread_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(thread_count);
    for (std::size_t t = 0; t < thread_count; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  std::vector<RefinementResult> results;
  for (std::optional<RefinementResult>& slot : slots) {
    if (slot.has_value()) {
      results.push_back(std::move(*slot));
    }
  }
  return results;
}

}  // namespace msmi

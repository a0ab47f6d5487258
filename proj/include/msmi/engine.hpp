#pragma once

#include <optional>
#include <string>
#include <vector>

#include "msmi/corpus.hpp"
#include "msmi/discriminator.hpp"
#include "msmi/generator.hpp"

namespace msmi {

struct AttackGoal {
  enum class Kind { Targeted, Untargeted };
  Kind kind = Kind::Untargeted;
  int target_class = -1;

  static AttackGoal targeted(int class_index);
  static AttackGoal untargeted();
};

enum class Strategy { Msmi, Prompt };

std::string to_string(Strategy strategy);
Strategy parse_strategy(const std::string& text);

struct EngineConfig {
  double threshold = 0.5;  // in (0, 1)
  int max_iterations = 5;  // >= 1
  Strategy strategy = Strategy::Msmi;
  AttackGoal goal;
  TaskDescriptor task = TaskDescriptor::legal_refinement();
  PromptTemplates templates = PromptTemplates::defaults();
  bool embed_full_history = false;
};

struct IterationRecord {
  std::string candidate_text;
  Verdict verdict;
  double goal_score = 0.0;
  bool feedback_sent = false;  // a later prompt carried feedback on this candidate
  int generator_retries = 0;
};

enum class StopReason { ThresholdMet, BudgetExhausted, GeneratorError };

std::string to_string(StopReason reason);
StopReason parse_stop_reason(const std::string& text);

struct RefinementTrace {
  std::string doc_id;
  std::string original_text;
  Verdict original_verdict;
  double original_goal_score = 0.0;
  std::optional<int> true_label;
  std::vector<IterationRecord> iterations;
  StopReason stop_reason = StopReason::BudgetExhausted;
  std::string error_message;  // non-empty only for generator_error
};

struct RefinementResult {
  RefinementTrace trace;
  bool success = false;
  std::string output_text;
  double output_goal_score = 0.0;
};

/// Targeted(k): probability of class k. Untargeted: probability mass off the
/// original prediction.
double goal_score(const Verdict& v, const AttackGoal& goal, int original_prediction);

/// The iterative loop: generate, score, stop at first threshold crossing,
/// otherwise feed the cue back and try again, up to max_iterations candidates.
RefinementResult refine_msmi(const Record& doc, const Scorer& m, Generator& g,
                             const EngineConfig& cfg);

/// Baseline: one candidate from the initial prompt, scored only to judge success.
RefinementResult refine_single_pass(const Record& doc, const Scorer& m, Generator& g,
                                    const EngineConfig& cfg);

/// Dispatch on cfg.strategy.
RefinementResult refine(const Record& doc, const Scorer& m, Generator& g,
                        const EngineConfig& cfg);

/// Targeted goals skip documents already predicted as the target; untargeted
/// goals keep only documents the classifier currently gets right.
bool is_eligible(const Verdict& original, int true_label, const AttackGoal& goal);

/// Refines every eligible document, up to `parallelism` at a time. Results come
/// back in corpus order; a failure in one document never aborts the batch.
std::vector<RefinementResult> run_batch(const Corpus& corpus, const Scorer& m,
                                        GeneratorFactory& generators, const EngineConfig& cfg,
                                        int parallelism);

}  // namespace msmi

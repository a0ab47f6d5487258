#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "msmi/corpus.hpp"

namespace msmi {

/// A fully rendered request to the rewriting model. Any conversation history
/// is already folded into the user text.
struct PromptBundle {
  std::string system;
  std::string user;

  bool operator==(const PromptBundle&) const = default;
};

/// What the rewriter is asked to do. system_goal becomes the system prompt,
/// instruction is embedded in every user prompt.
struct TaskDescriptor {
  std::string instruction;
  std::string system_goal;

  /// Turn an informal claim into formal, persuasive legal text preserving all facts.
  static TaskDescriptor legal_refinement();
  /// Push a short text across the classifier's category boundary.
  static TaskDescriptor category_flip();
};

/// Prompt skeletons with {placeholder} slots. Recognized placeholders:
/// {goal}, {instruction}, {original}, {last_candidate}, {prev_p}, {cur_p}, {cue}.
struct PromptTemplates {
  std::string initial_system;
  std::string initial_user;
  std::string feedback_user;

  static PromptTemplates defaults();
  /// Reads initial_system.txt, initial_user.txt, feedback_user.txt from dir.
  /// Unknown placeholders are a configuration error.
  static PromptTemplates load_dir(const std::filesystem::path& dir);
};

struct FeedbackCue {
  double previous_probability = 0.0;
  double current_probability = 0.0;
  enum class Direction { Reinforcement, Rejection } direction = Direction::Rejection;
};

/// Reinforcement iff the score strictly improved.
FeedbackCue make_feedback_cue(double previous_probability, double current_probability);

/// The verbatim cue sentence embedded in feedback prompts.
std::string cue_sentence(const FeedbackCue& cue);

PromptBundle build_initial_prompt(const Record& doc, const TaskDescriptor& task,
                                  const PromptTemplates& templates);

struct HistoryItem {
  std::string candidate;
  std::string feedback;
};

/// Renders the latest candidate, both probabilities to three decimals, and the
/// cue sentence. When history is given, earlier (candidate, feedback) pairs are
/// prepended to the user text.
PromptBundle build_feedback_prompt(const Record& doc, const std::string& last_candidate,
                                   const FeedbackCue& cue, const TaskDescriptor& task,
                                   const PromptTemplates& templates,
                                   const std::vector<HistoryItem>* history = nullptr);

enum class GeneratorKind { ChatEndpoint, Mock };

struct GeneratorConfig {
  GeneratorKind kind = GeneratorKind::Mock;

  // chat_endpoint
  std::string endpoint_url;
  std::string model_name;
  double temperature = 0.7;
  int max_output_tokens = 1024;
  std::chrono::seconds timeout{60};
  int max_retries = 3;
  std::string api_key_env;  // name of the env var holding the bearer token; empty = no auth
  std::chrono::milliseconds backoff_base{1000};
  int max_in_flight = 4;
  double rate_per_second = 0.0;  // <= 0 disables throttling

  // mock
  std::uint64_t seed = 0;
  std::vector<std::string> mock_script;
};

struct GenerationResult {
  std::string text;
  int retries = 0;
};

class Generator {
 public:
  virtual ~Generator() = default;
  virtual GenerationResult generate(const PromptBundle& prompt) = 0;
};

/// Deterministic offline stand-in: call i appends script phrase i to the
/// running candidate; an exhausted script returns the candidate unchanged.
class MockGenerator final : public Generator {
 public:
  MockGenerator(std::string original_text, std::vector<std::string> script);

  GenerationResult generate(const PromptBundle& prompt) override;

 private:
  std::string candidate_;
  std::vector<std::string> script_;
  std::size_t next_phrase_ = 0;
};

/// OpenAI-style chat completions client. Not safe for concurrent use; the
/// factory hands out one instance per document and shares the throttles.
class ChatEndpointGenerator final : public Generator {
 public:
  GenerationResult generate(const PromptBundle& prompt) override;

  ~ChatEndpointGenerator() override;

 private:
  friend class ChatEndpointGeneratorFactory;
  struct Shared;
  ChatEndpointGenerator(GeneratorConfig config, std::shared_ptr<Shared> shared);

  GeneratorConfig config_;
  std::shared_ptr<Shared> shared_;
};

/// Unwraps a leading/trailing triple-backtick fence, if present.
std::string strip_markup_fences(const std::string& text);

class GeneratorFactory {
 public:
  virtual ~GeneratorFactory() = default;
  virtual std::unique_ptr<Generator> create(const Record& doc) = 0;
  virtual std::string name() const = 0;
  /// Cheap reachability check, run before any document is processed.
  virtual void preflight() {}
};

class MockGeneratorFactory final : public GeneratorFactory {
 public:
  explicit MockGeneratorFactory(GeneratorConfig config);

  std::unique_ptr<Generator> create(const Record& doc) override;
  std::string name() const override { return "mock"; }

 private:
  GeneratorConfig config_;
};

class ChatEndpointGeneratorFactory final : public GeneratorFactory {
 public:
  explicit ChatEndpointGeneratorFactory(GeneratorConfig config);
  ~ChatEndpointGeneratorFactory() override;

  std::unique_ptr<Generator> create(const Record& doc) override;
  std::string name() const override;
  void preflight() override;

 private:
  GeneratorConfig config_;
  std::shared_ptr<ChatEndpointGenerator::Shared> shared_;
};

std::unique_ptr<GeneratorFactory> make_generator_factory(const GeneratorConfig& config);

}  // namespace msmi

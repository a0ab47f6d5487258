#include "msmi/generator.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "http_util.hpp"
#include "msmi/errors.hpp"

namespace msmi {
namespace {

std::string trim_copy(std::string s) {
  const auto is_ws = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t begin = 0;
  while (begin < s.size() && is_ws(s[begin])) ++begin;
  std::size_t end = s.size();
  while (end > begin && is_ws(s[end - 1])) --end;
  return s.substr(begin, end - begin);
}

bool is_placeholder_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

/// Replaces each {name} slot with its value. A '{' not forming a
/// lowercase-and-underscore name passes through literally; a well-formed name
/// outside `allowed` is a configuration error.
std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& values,
                            const std::set<std::string>& allowed) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] != '{') {
      out.push_back(tmpl[i++]);
      continue;
    }
    std::size_t j = i + 1;
    while (j < tmpl.size() && is_placeholder_char(tmpl[j])) ++j;
    if (j == i + 1 || j >= tmpl.size() || tmpl[j] != '}') {
      out.push_back(tmpl[i++]);
      continue;
    }
    const std::string name = tmpl.substr(i + 1, j - i - 1);
    if (!allowed.contains(name)) {
      throw ConfigError("unknown prompt template placeholder {" + name + "}");
    }
    const auto it = values.find(name);
    if (it != values.end()) {
      out += it->second;
    }
    i = j + 1;
  }
  return out;
}

const std::set<std::string> kInitialPlaceholders = {"goal", "instruction", "original"};
const std::set<std::string> kFeedbackPlaceholders = {
    "goal", "instruction", "original", "last_candidate", "prev_p", "cur_p", "cue"};

void validate_templates(const PromptTemplates& templates) {
  const std::map<std::string, std::string> empty;
  render_template(templates.initial_system, empty, kInitialPlaceholders);
  render_template(templates.initial_user, empty, kInitialPlaceholders);
  render_template(templates.feedback_user, empty, kFeedbackPlaceholders);
}

std::string format_probability(double p) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.3f", p);
  return buffer;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot read prompt template " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

/// Splits scheme://authority[/prefix] so httplib gets a bare origin and the
/// prefix rides on the request path.
std::pair<std::string, std::string> split_url(const std::string& url) {
  const std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw ConfigError("endpoint url \"" + url + "\" has no scheme");
  }
  const std::size_t slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) {
    return {url, ""};
  }
  std::string prefix = url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, slash), prefix};
}

}  // namespace

TaskDescriptor TaskDescriptor::legal_refinement() {
  TaskDescriptor task;
  task.system_goal =
      "You are a legal writing assistant. Transform the informal claim into formal, "
      "persuasive legal text preserving all facts. Never invent facts that are not "
      "in the original.";
  task.instruction =
      "Rewrite the document below as formal, persuasive legal text. Keep every stated "
      "fact and add none.";
  return task;
}

TaskDescriptor TaskDescriptor::category_flip() {
  TaskDescriptor task;
  task.system_goal =
      "You are a text editing assistant. Your task: rewrite so its category changes "
      "while preserving fluency.";
  task.instruction =
      "Your task: rewrite so its category changes while preserving fluency. Keep the "
      "text natural and roughly the same length.";
  return task;
}

PromptTemplates PromptTemplates::defaults() {
  PromptTemplates t;
  t.initial_system = "{goal}";
  t.initial_user =
      "{instruction}\n"
      "\n"
      "Original document:\n"
      "{original}\n"
      "\n"
      "Reply with the rewritten document only.";
  t.feedback_user =
      "{instruction}\n"
      "\n"
      "Original document:\n"
      "{original}\n"
      "\n"
      "Your previous revision:\n"
      "{last_candidate}\n"
      "\n"
      "The assessment moved from {prev_p} to {cur_p}. Feedback: {cue}\n"
      "\n"
      "Reply with the rewritten document only.";
  return t;
}

PromptTemplates PromptTemplates::load_dir(const std::filesystem::path& dir) {
  PromptTemplates t;
  t.initial_system = read_text_file(dir / "initial_system.txt");
  t.initial_user = read_text_file(dir / "initial_user.txt");
  t.feedback_user = read_text_file(dir / "feedback_user.txt");
  validate_templates(t);
  return t;
}

FeedbackCue make_feedback_cue(double previous_probability, double current_probability) {
  FeedbackCue cue;
  cue.previous_probability = previous_probability;
  cue.current_probability = current_probability;
  cue.direction = current_probability > previous_probability
                      ? FeedbackCue::Direction::Reinforcement
                      : FeedbackCue::Direction::Rejection;
  return cue;
}

std::string cue_sentence(const FeedbackCue& cue) {
  return cue.direction == FeedbackCue::Direction::Reinforcement
             ? "your revision moved the assessment toward the target, continue strengthening"
             : "your revision was rejected, change approach";
}

PromptBundle build_initial_prompt(const Record& doc, const TaskDescriptor& task,
                                  const PromptTemplates& templates) {
  if (doc.claim.empty()) {
    throw DataError("document \"" + doc.id + "\" has no text to rewrite");
  }
  const std::map<std::string, std::string> values = {
      {"goal", task.system_goal},
      {"instruction", task.instruction},
      {"original", doc.claim},
  };
  PromptBundle bundle;
  bundle.system = render_template(templates.initial_system, values, kInitialPlaceholders);
  bundle.user = render_template(templates.initial_user, values, kInitialPlaceholders);
  return bundle;
}

PromptBundle build_feedback_prompt(const Record& doc, const std::string& last_candidate,
                                   const FeedbackCue& cue, const TaskDescriptor& task,
                                   const PromptTemplates& templates,
                                   const std::vector<HistoryItem>* history) {
  if (doc.claim.empty()) {
    throw DataError("document \"" + doc.id + "\" has no text to rewrite");
  }
  if (last_candidate.empty()) {
    throw DataError("feedback prompt needs a previous candidate");
  }
  const std::map<std::string, std::string> values = {
      {"goal", task.system_goal},
      {"instruction", task.instruction},
      {"original", doc.claim},
      {"last_candidate", last_candidate},
      {"prev_p", format_probability(cue.previous_probability)},
      {"cur_p", format_probability(cue.current_probability)},
      {"cue", cue_sentence(cue)},
  };
  PromptBundle bundle;
  bundle.system = render_template(templates.initial_system, values, kInitialPlaceholders);
  bundle.user = render_template(templates.feedback_user, values, kFeedbackPlaceholders);
  if (history != nullptr && !history->empty()) {
    std::string block = "Earlier attempts:\n";
    for (std::size_t i = 0; i < history->size(); ++i) {
      block += std::to_string(i + 1) + ". " + (*history)[i].candidate + "\n";
      block += "   Feedback: " + (*history)[i].feedback + "\n";
    }
    bundle.user = block + "\n" + bundle.user;
  }
  return bundle;
}

MockGenerator::MockGenerator(std::string original_text, std::vector<std::string> script)
    : candidate_(std::move(original_text)), script_(std::move(script)) {}

GenerationResult MockGenerator::generate(const PromptBundle&) {
  if (next_phrase_ < script_.size()) {
    const std::string& phrase = script_[next_phrase_++];
    if (candidate_.empty()) {
      candidate_ = phrase;
    } else if (!phrase.empty() && std::ispunct(static_cast<unsigned char>(phrase.front()))) {
      candidate_ += phrase;
    } else {
      candidate_ += " " + phrase;
    }
  }
  return GenerationResult{candidate_, 0};
}

std::string strip_markup_fences(const std::string& text) {
  std::string s = trim_copy(text);
  if (s.size() < 6 || s.compare(0, 3, "```") != 0 ||
      s.compare(s.size() - 3, 3, "```") != 0) {
    return s;
  }
  const std::size_t first_newline = s.find('\n');
  const std::size_t last_newline = s.rfind('\n');
  if (first_newline == std::string::npos || last_newline <= first_newline) {
    return s;
  }
  return trim_copy(s.substr(first_newline + 1, last_newline - first_newline - 1));
}

struct ChatEndpointGenerator::Shared {
  Shared(int max_in_flight, double rate) : cap(max_in_flight), limiter(rate) {}
  detail::InFlightCap cap;
  detail::RateLimiter limiter;
  std::string api_key;
  std::atomic<std::uint64_t> call_counter{0};
};

ChatEndpointGenerator::ChatEndpointGenerator(GeneratorConfig config,
                                             std::shared_ptr<Shared> shared)
    : config_(std::move(config)), shared_(std::move(shared)) {}

ChatEndpointGenerator::~ChatEndpointGenerator() = default;

GenerationResult ChatEndpointGenerator::generate(const PromptBundle& prompt) {
  const auto [base_url, prefix] = split_url(config_.endpoint_url);
  const std::string path = prefix + "/chat/completions";
  const std::string identity = base_url + path;

  nlohmann::ordered_json body = {
      {"model", config_.model_name},
      {"messages",
       {{{"role", "system"}, {"content", prompt.system}},
        {{"role", "user"}, {"content", prompt.user}}}},
      {"temperature", config_.temperature},
      {"max_tokens", config_.max_output_tokens},
  };

  httplib::Headers headers;
  if (!shared_->api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + shared_->api_key);
  }

  detail::RetryPolicy policy;
  policy.max_retries = config_.max_retries;
  policy.backoff_base = config_.backoff_base;
  policy.jitter_seed = shared_->call_counter.fetch_add(1);

  int retries = 0;
  std::string text = detail::with_retries(
      policy,
      [&] {
        shared_->limiter.acquire();
        auto slot = shared_->cap.enter();
        const detail::HttpResponse response =
            detail::post_json(base_url, path, body.dump(), headers, config_.timeout);
        if (response.status != 200) {
          const std::string message =
              "generator " + identity + " returned status " + std::to_string(response.status);
          if (detail::retryable_status(response.status)) {
            throw TransportError(message, /*retryable=*/true);
          }
          throw ProtocolError(message);
        }
        nlohmann::json doc;
        try {
          doc = nlohmann::json::parse(response.body);
        } catch (const nlohmann::json::exception& error) {
          throw ProtocolError("generator " + identity + " returned invalid JSON: " +
                              error.what());
        }
        if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty() ||
            !doc["choices"][0].contains("message") ||
            !doc["choices"][0]["message"].contains("content") ||
            !doc["choices"][0]["message"]["content"].is_string()) {
          throw ProtocolError("generator " + identity +
                              " response lacks choices[0].message.content");
        }
        std::string content =
            strip_markup_fences(doc["choices"][0]["message"]["content"].get<std::string>());
        if (content.empty()) {
          throw ProtocolError("empty completion from generator " + identity);
        }
        return content;
      },
      &retries);
  return GenerationResult{std::move(text), retries};
}

MockGeneratorFactory::MockGeneratorFactory(GeneratorConfig config) : config_(std::move(config)) {
  if (config_.kind != GeneratorKind::Mock) {
    throw ConfigError("MockGeneratorFactory requires kind = mock");
  }
}

std::unique_ptr<Generator> MockGeneratorFactory::create(const Record& doc) {
  return std::make_unique<MockGenerator>(doc.claim, config_.mock_script);
}

ChatEndpointGeneratorFactory::ChatEndpointGeneratorFactory(GeneratorConfig config)
    : config_(std::move(config)) {
  if (config_.kind != GeneratorKind::ChatEndpoint) {
    throw ConfigError("ChatEndpointGeneratorFactory requires kind = chat_endpoint");
  }
  if (config_.endpoint_url.empty() || config_.model_name.empty()) {
    throw ConfigError("chat_endpoint generator needs endpoint_url and model_name");
  }
  if (config_.max_output_tokens < 1) {
    throw ConfigError("max_output_tokens must be >= 1");
  }
  shared_ = std::make_shared<ChatEndpointGenerator::Shared>(config_.max_in_flight,
                                                            config_.rate_per_second);
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw ConfigError("environment variable " + config_.api_key_env +
                        " (generator credential) is not set");
    }
    shared_->api_key = key;
  }
  split_url(config_.endpoint_url);  // validates the scheme up front
}

ChatEndpointGeneratorFactory::~ChatEndpointGeneratorFactory() = default;

std::unique_ptr<Generator> ChatEndpointGeneratorFactory::create(const Record&) {
  return std::unique_ptr<Generator>(new ChatEndpointGenerator(config_, shared_));
}

std::string ChatEndpointGeneratorFactory::name() const { return config_.model_name; }

void ChatEndpointGeneratorFactory::preflight() {
  const auto [base_url, prefix] = split_url(config_.endpoint_url);
  httplib::Client client(base_url);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  auto result = client.Get(prefix.empty() ? "/" : prefix);
  if (!result) {
    throw TransportError("generator endpoint " + config_.endpoint_url +
                             " unreachable: " + httplib::to_string(result.error()),
                         /*retryable=*/true);
  }
}

std::unique_ptr<GeneratorFactory> make_generator_factory(const GeneratorConfig& config) {
  switch (config.kind) {
    case GeneratorKind::Mock:
      return std::make_unique<MockGeneratorFactory>(config);
    case GeneratorKind::ChatEndpoint:
      return std::make_unique<ChatEndpointGeneratorFactory>(config);
  }
  throw ConfigError("unknown generator kind");
}

}  // namespace msmi

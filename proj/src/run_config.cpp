#include "msmi/run_config.hpp"

#include "msmi/errors.hpp"
#include "msmi/random.hpp"

namespace msmi {
namespace {

GeneratorKind parse_generator_kind(const std::string& text) {
  if (text == "mock") return GeneratorKind::Mock;
  if (text == "chat_endpoint" || text == "endpoint") return GeneratorKind::ChatEndpoint;
  throw ConfigError("unknown generator kind \"" + text + "\", expected mock or chat_endpoint");
}

std::string to_string(GeneratorKind kind) {
  return kind == GeneratorKind::Mock ? "mock" : "chat_endpoint";
}

TokenizerMode parse_tokenizer_mode(const std::string& text) {
  if (text == "char_ngram") return TokenizerMode::CharNgram;
  if (text == "word") return TokenizerMode::Word;
  throw ConfigError("unknown tokenizer mode \"" + text + "\", expected char_ngram or word");
}

std::string to_string(TokenizerMode mode) {
  return mode == TokenizerMode::CharNgram ? "char_ngram" : "word";
}

int get_checked_int(const toml::Table& table, const std::string& key, int fallback) {
  const auto value = toml::get_int(table, key);
  if (!value.has_value()) return fallback;
  if (*value < INT32_MIN || *value > INT32_MAX) {
    throw ConfigError("config key \"" + key + "\" is out of range");
  }
  return static_cast<int>(*value);
}

}  // namespace

RunConfig config_from_table(const toml::Table& table) {
  RunConfig c;

  if (const auto seed = toml::get_int(table, "run.seed")) {
    c.seed = static_cast<std::uint64_t>(*seed);
    c.seed_set = true;
  }
  c.out_dir = toml::get_string(table, "run.out").value_or(c.out_dir);
  c.parallelism = get_checked_int(table, "run.parallelism", c.parallelism);
  c.model_path = toml::get_string(table, "run.model").value_or(c.model_path);

  c.corpus_path = toml::get_string(table, "corpus.path").value_or(c.corpus_path);
  if (const auto schema = toml::get_string(table, "corpus.schema")) {
    c.schema = parse_schema(*schema);
  }
  c.label_names = toml::get_string_array(table, "corpus.label_names").value_or(c.label_names);
  c.ratios.train = toml::get_double(table, "corpus.train_ratio").value_or(c.ratios.train);
  c.ratios.val = toml::get_double(table, "corpus.val_ratio").value_or(c.ratios.val);
  c.ratios.test = toml::get_double(table, "corpus.test_ratio").value_or(c.ratios.test);
  c.split = toml::get_string(table, "corpus.split").value_or(c.split);
  c.concatenate_fields =
      toml::get_bool(table, "corpus.concatenate_fields").value_or(c.concatenate_fields);

  if (const auto mode = toml::get_string(table, "tokenizer.mode")) {
    c.tokenizer.mode = parse_tokenizer_mode(*mode);
  }
  c.tokenizer.ngram_min = get_checked_int(table, "tokenizer.ngram_min", c.tokenizer.ngram_min);
  c.tokenizer.ngram_max = get_checked_int(table, "tokenizer.ngram_max", c.tokenizer.ngram_max);
  c.tokenizer.lowercase = toml::get_bool(table, "tokenizer.lowercase").value_or(c.tokenizer.lowercase);

  c.train.epochs = get_checked_int(table, "train.epochs", c.train.epochs);
  c.train.learning_rate_0 =
      toml::get_double(table, "train.learning_rate").value_or(c.train.learning_rate_0);
  c.train.l2_lambda = toml::get_double(table, "train.l2_lambda").value_or(c.train.l2_lambda);
  c.train.vocab_size_max =
      get_checked_int(table, "train.vocab_size_max", c.train.vocab_size_max);
  c.train.min_doc_freq = get_checked_int(table, "train.min_doc_freq", c.train.min_doc_freq);

  if (const auto kind = toml::get_string(table, "generator.kind")) {
    c.generator.kind = parse_generator_kind(*kind);
  }
  c.generator.endpoint_url =
      toml::get_string(table, "generator.endpoint_url").value_or(c.generator.endpoint_url);
  c.generator.model_name =
      toml::get_string(table, "generator.model_name").value_or(c.generator.model_name);
  c.generator.temperature =
      toml::get_double(table, "generator.temperature").value_or(c.generator.temperature);
  c.generator.max_output_tokens =
      get_checked_int(table, "generator.max_output_tokens", c.generator.max_output_tokens);
  c.generator.timeout = std::chrono::seconds(get_checked_int(
      table, "generator.timeout_seconds", static_cast<int>(c.generator.timeout.count())));
  c.generator.max_retries =
      get_checked_int(table, "generator.max_retries", c.generator.max_retries);
  c.generator.api_key_env =
      toml::get_string(table, "generator.api_key_env").value_or(c.generator.api_key_env);
  c.generator.backoff_base = std::chrono::milliseconds(get_checked_int(
      table, "generator.backoff_ms", static_cast<int>(c.generator.backoff_base.count())));
  c.generator.max_in_flight =
      get_checked_int(table, "generator.max_in_flight", c.generator.max_in_flight);
  c.generator.rate_per_second =
      toml::get_double(table, "generator.rate_per_second").value_or(c.generator.rate_per_second);
  c.generator.mock_script =
      toml::get_string_array(table, "generator.script").value_or(c.generator.mock_script);

  c.threshold = toml::get_double(table, "engine.threshold").value_or(c.threshold);
  c.max_iterations = get_checked_int(table, "engine.max_iterations", c.max_iterations);
  if (const auto strategy = toml::get_string(table, "engine.strategy")) {
    c.strategy = parse_strategy(*strategy);
  }
  c.goal = toml::get_string(table, "engine.goal").value_or(c.goal);
  c.target_class = get_checked_int(table, "engine.target_class", c.target_class);
  c.task = toml::get_string(table, "engine.task").value_or(c.task);
  c.embed_full_history =
      toml::get_bool(table, "engine.embed_full_history").value_or(c.embed_full_history);
  c.prompt_dir = toml::get_string(table, "engine.prompt_dir").value_or(c.prompt_dir);

  c.scorer_kind = toml::get_string(table, "scorer.kind").value_or(c.scorer_kind);
  c.remote_classifier.base_url =
      toml::get_string(table, "scorer.base_url").value_or(c.remote_classifier.base_url);
  c.remote_classifier.path =
      toml::get_string(table, "scorer.path").value_or(c.remote_classifier.path);
  c.remote_classifier.timeout = std::chrono::seconds(get_checked_int(
      table, "scorer.timeout_seconds", static_cast<int>(c.remote_classifier.timeout.count())));
  c.remote_classifier.max_retries =
      get_checked_int(table, "scorer.max_retries", c.remote_classifier.max_retries);
  c.remote_classifier.backoff_base = std::chrono::milliseconds(get_checked_int(
      table, "scorer.backoff_ms", static_cast<int>(c.remote_classifier.backoff_base.count())));
  c.remote_classifier.max_in_flight =
      get_checked_int(table, "scorer.max_in_flight", c.remote_classifier.max_in_flight);

  c.embedding_kind = toml::get_string(table, "embedding.kind").value_or(c.embedding_kind);
  c.remote_embedding.base_url =
      toml::get_string(table, "embedding.base_url").value_or(c.remote_embedding.base_url);
  c.remote_embedding.path =
      toml::get_string(table, "embedding.path").value_or(c.remote_embedding.path);
  c.remote_embedding.dimension =
      get_checked_int(table, "embedding.dimension", c.remote_embedding.dimension);
  c.remote_embedding.timeout = std::chrono::seconds(get_checked_int(
      table, "embedding.timeout_seconds", static_cast<int>(c.remote_embedding.timeout.count())));
  c.remote_embedding.max_retries =
      get_checked_int(table, "embedding.max_retries", c.remote_embedding.max_retries);
  c.remote_embedding.backoff_base = std::chrono::milliseconds(get_checked_int(
      table, "embedding.backoff_ms", static_cast<int>(c.remote_embedding.backoff_base.count())));

  // Every key the writer would emit is legal; anything else is a typo.
  const toml::Table known = config_to_table(c);
  for (const auto& [key, value] : table) {
    if (!known.contains(key)) {
      throw ConfigError("unknown config key \"" + key + "\"");
    }
  }
  return c;
}

toml::Table config_to_table(const RunConfig& c) {
  toml::Table t;
  t.emplace("run.seed", static_cast<std::int64_t>(c.seed));
  t.emplace("run.out", c.out_dir);
  t.emplace("run.parallelism", static_cast<std::int64_t>(c.parallelism));
  t.emplace("run.model", c.model_path);

  t.emplace("corpus.path", c.corpus_path);
  t.emplace("corpus.schema", std::string(to_string(c.schema)));
  {
    std::vector<toml::Scalar> names;
    for (const std::string& name : c.label_names) names.emplace_back(name);
    t.emplace("corpus.label_names", std::move(names));
  }
  t.emplace("corpus.train_ratio", c.ratios.train);
  t.emplace("corpus.val_ratio", c.ratios.val);
  t.emplace("corpus.test_ratio", c.ratios.test);
  t.emplace("corpus.split", c.split);
  t.emplace("corpus.concatenate_fields", c.concatenate_fields);

  t.emplace("tokenizer.mode", to_string(c.tokenizer.mode));
  t.emplace("tokenizer.ngram_min", static_cast<std::int64_t>(c.tokenizer.ngram_min));
  t.emplace("tokenizer.ngram_max", static_cast<std::int64_t>(c.tokenizer.ngram_max));
  t.emplace("tokenizer.lowercase", c.tokenizer.lowercase);

  t.emplace("train.epochs", static_cast<std::int64_t>(c.train.epochs));
  t.emplace("train.learning_rate", c.train.learning_rate_0);
  t.emplace("train.l2_lambda", c.train.l2_lambda);
  t.emplace("train.vocab_size_max", static_cast<std::int64_t>(c.train.vocab_size_max));
  t.emplace("train.min_doc_freq", static_cast<std::int64_t>(c.train.min_doc_freq));

  t.emplace("generator.kind", to_string(c.generator.kind));
  t.emplace("generator.endpoint_url", c.generator.endpoint_url);
  t.emplace("generator.model_name", c.generator.model_name);
  t.emplace("generator.temperature", c.generator.temperature);
  t.emplace("generator.max_output_tokens",
            static_cast<std::int64_t>(c.generator.max_output_tokens));
  t.emplace("generator.timeout_seconds",
            static_cast<std::int64_t>(c.generator.timeout.count()));
  t.emplace("generator.max_retries", static_cast<std::int64_t>(c.generator.max_retries));
  t.emplace("generator.api_key_env", c.generator.api_key_env);
  t.emplace("generator.backoff_ms", static_cast<std::int64_t>(c.generator.backoff_base.count()));
  t.emplace("generator.max_in_flight", static_cast<std::int64_t>(c.generator.max_in_flight));
  t.emplace("generator.rate_per_second", c.generator.rate_per_second);
  {
    std::vector<toml::Scalar> script;
    for (const std::string& phrase : c.generator.mock_script) script.emplace_back(phrase);
    t.emplace("generator.script", std::move(script));
  }

  t.emplace("engine.threshold", c.threshold);
  t.emplace("engine.max_iterations", static_cast<std::int64_t>(c.max_iterations));
  t.emplace("engine.strategy", to_string(c.strategy));
  t.emplace("engine.goal", c.goal);
  t.emplace("engine.target_class", static_cast<std::int64_t>(c.target_class));
  t.emplace("engine.task", c.task);
  t.emplace("engine.embed_full_history", c.embed_full_history);
  t.emplace("engine.prompt_dir", c.prompt_dir);

  t.emplace("scorer.kind", c.scorer_kind);
  t.emplace("scorer.base_url", c.remote_classifier.base_url);
  t.emplace("scorer.path", c.remote_classifier.path);
  t.emplace("scorer.timeout_seconds",
            static_cast<std::int64_t>(c.remote_classifier.timeout.count()));
  t.emplace("scorer.max_retries", static_cast<std::int64_t>(c.remote_classifier.max_retries));
  t.emplace("scorer.backoff_ms",
            static_cast<std::int64_t>(c.remote_classifier.backoff_base.count()));
  t.emplace("scorer.max_in_flight",
            static_cast<std::int64_t>(c.remote_classifier.max_in_flight));

  t.emplace("embedding.kind", c.embedding_kind);
  t.emplace("embedding.base_url", c.remote_embedding.base_url);
  t.emplace("embedding.path", c.remote_embedding.path);
  t.emplace("embedding.dimension", static_cast<std::int64_t>(c.remote_embedding.dimension));
  t.emplace("embedding.timeout_seconds",
            static_cast<std::int64_t>(c.remote_embedding.timeout.count()));
  t.emplace("embedding.max_retries",
            static_cast<std::int64_t>(c.remote_embedding.max_retries));
  t.emplace("embedding.backoff_ms",
            static_cast<std::int64_t>(c.remote_embedding.backoff_base.count()));
  return t;
}

RunConfig load_config_file(const std::filesystem::path& path) {
  toml::Table table;
  try {
    table = toml::parse_file(path);
  } catch (const ParseError& error) {
    throw ConfigError("config file " + path.string() + ": " + error.what());
  }
  return config_from_table(table);
}

std::uint64_t sub_seed(const RunConfig& config, std::string_view purpose) {
  return derive_seed(config.seed, purpose);
}

EngineConfig make_engine_config(const RunConfig& config) {
  EngineConfig engine;
  engine.threshold = config.threshold;
  engine.max_iterations = config.max_iterations;
  engine.strategy = config.strategy;
  engine.embed_full_history = config.embed_full_history;

  if (config.goal == "targeted" || config.goal.empty()) {
    engine.goal = AttackGoal::targeted(config.target_class);
  } else if (config.goal == "untargeted") {
    engine.goal = AttackGoal::untargeted();
  } else {
    throw ConfigError("unknown goal \"" + config.goal + "\", expected targeted or untargeted");
  }

  if (config.task == "legal_refinement" || config.task.empty()) {
    engine.task = TaskDescriptor::legal_refinement();
  } else if (config.task == "category_flip") {
    engine.task = TaskDescriptor::category_flip();
  } else {
    throw ConfigError("unknown task \"" + config.task +
                      "\", expected legal_refinement or category_flip");
  }

  engine.templates = config.prompt_dir.empty() ? PromptTemplates::defaults()
                                               : PromptTemplates::load_dir(config.prompt_dir);
  return engine;
}

}  // namespace msmi

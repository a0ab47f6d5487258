#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "msmi/corpus.hpp"
#include "msmi/discriminator.hpp"
#include "msmi/engine.hpp"
#include "msmi/generator.hpp"
#include "msmi/metrics.hpp"
#include "msmi/remote_scorer.hpp"
#include "msmi/toml.hpp"

namespace msmi {

/// Everything a run needs, resolved from defaults, the config file, and
/// command-line flags (flags > file > defaults). The seed has no wall-clock
/// fallback; runs without one are rejected.
struct RunConfig {
  // [run]
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir = "runs/out";
  int parallelism = 1;
  std::string model_path;  // defaults to <out_dir>/model.bin

  // [corpus]
  std::string corpus_path;
  CorpusSchema schema = CorpusSchema::Findr;
  std::vector<std::string> label_names;  // short_text files without a header line
  SplitRatios ratios;
  std::string split = "test";  // which split refine/attack read: train|val|test|all
  bool concatenate_fields = false;

  TokenizerConfig tokenizer;
  TrainConfig train;
  GeneratorConfig generator;

  // [engine]
  double threshold = 0.5;
  int max_iterations = 5;
  Strategy strategy = Strategy::Msmi;
  std::string goal;  // "targeted" | "untargeted"; empty lets the command pick
  int target_class = 1;
  std::string task;  // "legal_refinement" | "category_flip"; empty lets the command pick
  bool embed_full_history = false;
  std::string prompt_dir;  // empty: built-in templates

  // [scorer]
  std::string scorer_kind = "builtin";  // or "remote"
  RemoteClassifierConfig remote_classifier;

  // [embedding]
  std::string embedding_kind = "tfidf";  // or "remote"
  RemoteEmbeddingConfig remote_embedding;
};

/// Rejects unknown keys and wrong types.
RunConfig config_from_table(const toml::Table& table);

/// Emits every field, so the snapshot is a complete record of the run.
toml::Table config_to_table(const RunConfig& config);

/// Parse failures surface as ConfigError (the file is configuration).
RunConfig load_config_file(const std::filesystem::path& path);

/// All randomness flows from the run seed through per-purpose derived seeds.
std::uint64_t sub_seed(const RunConfig& config, std::string_view purpose);

EngineConfig make_engine_config(const RunConfig& config);

}  // namespace msmi

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

#include "msmi/corpus.hpp"
#include "msmi/discriminator.hpp"
#include "msmi/engine.hpp"
#include "msmi/errors.hpp"
#include "msmi/generator.hpp"
#include "msmi/metrics.hpp"
#include "msmi/remote_scorer.hpp"
#include "msmi/run_config.hpp"
#include "msmi/toml.hpp"
#include "msmi/trace_io.hpp"

namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string config_path;
  std::optional<std::int64_t> seed;
  std::string out;
  std::optional<int> parallelism;
  std::string strategy;
  std::string generator;
};

msmi::RunConfig resolve_config(const Flags& flags, bool need_seed) {
  msmi::RunConfig config;
  if (!flags.config_path.empty()) {
    config = msmi::load_config_file(flags.config_path);
  }
  if (flags.seed.has_value()) {
    config.seed = static_cast<std::uint64_t>(*flags.seed);
    config.seed_set = true;
  }
  if (!flags.out.empty()) config.out_dir = flags.out;
  if (flags.parallelism.has_value()) config.parallelism = *flags.parallelism;
  if (!flags.strategy.empty()) config.strategy = msmi::parse_strategy(flags.strategy);
  if (!flags.generator.empty()) {
    if (flags.generator == "mock") {
      config.generator.kind = msmi::GeneratorKind::Mock;
    } else if (flags.generator == "endpoint") {
      config.generator.kind = msmi::GeneratorKind::ChatEndpoint;
    } else {
      throw msmi::ConfigError("--generator must be mock or endpoint");
    }
  }
  if (need_seed && !config.seed_set) {
    throw msmi::ConfigError("no seed given; set run.seed in the config or pass --seed");
  }
  return config;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw msmi::IoError("cannot write " + path.string());
  }
  out << content;
  if (!out) {
    throw msmi::IoError("failed while writing " + path.string());
  }
}

void write_snapshot(const msmi::RunConfig& config) {
  write_file(fs::path(config.out_dir) / "config.resolved.toml",
             msmi::toml::serialize(msmi::config_to_table(config)));
}

msmi::Corpus load_corpus_for(const msmi::RunConfig& config) {
  if (config.corpus_path.empty()) {
    throw msmi::ConfigError("corpus.path is required");
  }
  msmi::LoadOptions options;
  options.label_names = config.label_names;
  msmi::LoadStats stats;
  msmi::Corpus corpus = msmi::load_corpus(config.corpus_path, config.schema, options, &stats);
  if (stats.dropped_other > 0) {
    std::cerr << "warning: dropped " << stats.dropped_other
              << " record(s) labeled \"other\"\n";
  }
  return corpus;
}

const msmi::Corpus& pick_split(const msmi::Corpus& full, const msmi::CorpusSplit& split,
                               const std::string& name) {
  if (name == "all") return full;
  if (name == "train") return split.train;
  if (name == "val") return split.val;
  if (name == "test") return split.test;
  throw msmi::ConfigError("corpus.split must be train, val, test, or all, not \"" + name + "\"");
}

/// Any failure to produce a usable model maps to the model-load exit code.
msmi::DiscriminatorModel load_model_checked(const std::string& path) {
  try {
    return msmi::load_model(path);
  } catch (const msmi::ModelFormatError&) {
    throw;
  } catch (const msmi::Error& error) {
    throw msmi::ModelFormatError(error.what());
  }
}

int run_guarded(int fallback, const std::function<int()>& body) {
  try {
    return body();
  } catch (const msmi::ConfigError& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 1;
  } catch (const msmi::ModelFormatError& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 4;
  } catch (const msmi::TransportError& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 5;
  } catch (const msmi::ParseError& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 2;
  } catch (const msmi::DataError& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 2;
  } catch (const msmi::IoError& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 2;
  } catch (const msmi::ProtocolError& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 2;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return fallback;
  }
}

int cmd_train(const Flags& flags) {
  msmi::RunConfig config = resolve_config(flags, /*need_seed=*/true);
  const msmi::Corpus corpus = load_corpus_for(config);
  const msmi::CorpusSplit split =
      msmi::split_corpus(corpus, config.ratios, msmi::sub_seed(config, "split"));

  msmi::TrainConfig train_config = config.train;
  train_config.seed = msmi::sub_seed(config, "train");

  msmi::TrainReport report;
  const msmi::DiscriminatorModel model =
      msmi::train_classifier(split.train, split.val, train_config, config.tokenizer, &report,
                             config.concatenate_fields);

  fs::create_directories(config.out_dir);
  if (config.model_path.empty()) {
    config.model_path = (fs::path(config.out_dir) / "model.bin").string();
  }
  msmi::save_model(model, config.model_path);
  write_snapshot(config);

  std::cout << "documents: " << corpus.size() << " (train " << split.train.size() << ", val "
            << split.val.size() << ", test " << split.test.size() << ")\n";
  std::cout << "best epoch: " << report.best_epoch << " of " << config.train.epochs << "\n";
  std::printf("validation accuracy: %.6f\n", report.best_val_accuracy);
  std::cout << "model written to " << config.model_path << "\n";
  return 0;
}

int run_refinement(const Flags& flags, bool attack) {
  msmi::RunConfig config = resolve_config(flags, /*need_seed=*/true);
  if (attack) {
    config.goal = "untargeted";  // the attack protocol is untargeted by definition
  } else if (config.goal.empty()) {
    config.goal = "targeted";
  }
  if (config.task.empty()) {
    config.task = attack ? "category_flip" : "legal_refinement";
  }
  const msmi::EngineConfig engine = msmi::make_engine_config(config);

  if (config.model_path.empty()) {
    config.model_path = (fs::path(config.out_dir) / "model.bin").string();
  }

  std::optional<msmi::DiscriminatorModel> model;
  if (config.scorer_kind == "builtin" || config.embedding_kind == "tfidf") {
    model = load_model_checked(config.model_path);
  }

  std::unique_ptr<msmi::Scorer> remote_scorer_holder;
  const msmi::Scorer* scorer = nullptr;
  if (config.scorer_kind == "builtin") {
    scorer = &*model;
  } else if (config.scorer_kind == "remote") {
    config.remote_classifier.jitter_seed = msmi::sub_seed(config, "scorer_jitter");
    remote_scorer_holder = std::make_unique<msmi::RemoteScorer>(config.remote_classifier);
    scorer = remote_scorer_holder.get();
  } else {
    throw msmi::ConfigError("scorer.kind must be builtin or remote");
  }

  const msmi::Corpus corpus = load_corpus_for(config);
  const msmi::CorpusSplit split =
      msmi::split_corpus(corpus, config.ratios, msmi::sub_seed(config, "split"));
  const msmi::Corpus& selected = pick_split(corpus, split, config.split);

  config.generator.seed = msmi::sub_seed(config, "mock");
  const std::unique_ptr<msmi::GeneratorFactory> factory =
      msmi::make_generator_factory(config.generator);
  factory->preflight();

  const std::vector<msmi::RefinementResult> results =
      msmi::run_batch(selected, *scorer, *factory, engine, config.parallelism);
  if (results.empty()) {
    throw msmi::DataError("no eligible documents in split \"" + config.split +
                          "\": every document is already predicted as the target, or none is "
                          "predicted correctly");
  }

  std::unique_ptr<msmi::EmbeddingProvider> embedding;
  if (config.embedding_kind == "tfidf") {
    embedding = std::make_unique<msmi::TfidfEmbedding>(*model);
  } else if (config.embedding_kind == "remote") {
    config.remote_embedding.jitter_seed = msmi::sub_seed(config, "embed_jitter");
    embedding = std::make_unique<msmi::RemoteEmbedding>(config.remote_embedding);
  } else {
    throw msmi::ConfigError("embedding.kind must be tfidf or remote");
  }

  const msmi::Report report = msmi::build_report(results, *embedding, scorer,
                                                 msmi::to_string(config.strategy),
                                                 factory->name());

  fs::create_directories(config.out_dir);
  msmi::write_traces(fs::path(config.out_dir) / "traces.jsonl", results);
  write_file(fs::path(config.out_dir) / "report.json", msmi::report_to_json(report));
  const std::string text = msmi::render_report_text(report);
  write_file(fs::path(config.out_dir) / "report.txt", text);
  write_snapshot(config);

  std::cout << text;
  return 0;
}

int cmd_report(const Flags& flags) {
  std::string run_dir = flags.out;
  std::string config_path = flags.config_path;
  if (config_path.empty()) {
    if (run_dir.empty()) {
      throw msmi::ConfigError("report needs --out RUN_DIR (or --config SNAPSHOT)");
    }
    config_path = (fs::path(run_dir) / "config.resolved.toml").string();
  }
  Flags effective = flags;
  effective.config_path = config_path;
  msmi::RunConfig config = resolve_config(effective, /*need_seed=*/false);
  if (run_dir.empty()) run_dir = config.out_dir;

  const std::vector<msmi::RefinementResult> results =
      msmi::read_traces(fs::path(run_dir) / "traces.jsonl");
  if (results.empty()) {
    throw msmi::DataError("trace file in " + run_dir + " contains no documents");
  }

  std::optional<msmi::DiscriminatorModel> model;
  if (config.scorer_kind == "builtin" || config.embedding_kind == "tfidf") {
    if (config.model_path.empty()) {
      config.model_path = (fs::path(config.out_dir) / "model.bin").string();
    }
    model = load_model_checked(config.model_path);
  }

  std::unique_ptr<msmi::Scorer> remote_scorer_holder;
  const msmi::Scorer* scorer = nullptr;
  if (config.scorer_kind == "builtin") {
    scorer = &*model;
  } else if (config.scorer_kind == "remote") {
    remote_scorer_holder = std::make_unique<msmi::RemoteScorer>(config.remote_classifier);
    scorer = remote_scorer_holder.get();
  } else {
    throw msmi::ConfigError("scorer.kind must be builtin or remote");
  }

  std::unique_ptr<msmi::EmbeddingProvider> embedding;
  if (config.embedding_kind == "tfidf") {
    embedding = std::make_unique<msmi::TfidfEmbedding>(*model);
  } else if (config.embedding_kind == "remote") {
    embedding = std::make_unique<msmi::RemoteEmbedding>(config.remote_embedding);
  } else {
    throw msmi::ConfigError("embedding.kind must be tfidf or remote");
  }

  const std::string generator_name = config.generator.kind == msmi::GeneratorKind::Mock
                                         ? "mock"
                                         : config.generator.model_name;
  const msmi::Report report = msmi::build_report(results, *embedding, scorer,
                                                 msmi::to_string(config.strategy),
                                                 generator_name);

  write_file(fs::path(run_dir) / "report.json", msmi::report_to_json(report));
  const std::string text = msmi::render_report_text(report);
  write_file(fs::path(run_dir) / "report.txt", text);
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterative document refinement with classifier feedback"};
  app.require_subcommand(1);

  Flags flags;
  const auto add_common = [&flags](CLI::App* cmd) {
    cmd->add_option("--config", flags.config_path, "TOML config file");
    cmd->add_option("--seed", flags.seed, "run seed (required unless set in the config)");
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_option("--parallelism", flags.parallelism, "concurrent documents");
  };
  const auto add_refine_flags = [&flags](CLI::App* cmd) {
    cmd->add_option("--strategy", flags.strategy, "msmi or prompt")
        ->check(CLI::IsMember({"msmi", "prompt"}));
    cmd->add_option("--generator", flags.generator, "mock or endpoint")
        ->check(CLI::IsMember({"mock", "endpoint"}));
  };

  CLI::App* train = app.add_subcommand("train", "train the discriminating classifier");
  add_common(train);
  CLI::App* refine = app.add_subcommand("refine", "rewrite documents toward the target class");
  add_common(refine);
  add_refine_flags(refine);
  CLI::App* attack = app.add_subcommand("attack", "untargeted rewriting of correctly-predicted documents");
  add_common(attack);
  add_refine_flags(attack);
  CLI::App* report = app.add_subcommand("report", "recompute metrics from stored traces");
  add_common(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (train->parsed()) return run_guarded(3, [&] { return cmd_train(flags); });
  if (refine->parsed()) return run_guarded(1, [&] { return run_refinement(flags, false); });
  if (attack->parsed()) return run_guarded(1, [&] { return run_refinement(flags, true); });
  if (report->parsed()) return run_guarded(2, [&] { return cmd_report(flags); });
  return 1;
}

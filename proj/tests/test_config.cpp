#include <doctest.h>

#include <string>
#include <vector>

#include "msmi/errors.hpp"
#include "msmi/run_config.hpp"
#include "msmi/toml.hpp"
#include "support.hpp"

using namespace msmi;

TEST_CASE("toml: tables, dotted keys, comments and scalar types") {
  const std::string text = R"(# run settings
[run]
seed = 42            # inline comment
out = "runs/exp1"

[corpus]
path = "data/findr.jsonl"
train_ratio = 0.8
concatenate_fields = false
label_names = ["unreasonable", "reasonable"]

engine.threshold = 0.5
)";
  const toml::Table table = toml::parse(text);
  CHECK(toml::get_int(table, "run.seed") == 42);
  CHECK(toml::get_string(table, "run.out") == "runs/exp1");
  CHECK(toml::get_double(table, "corpus.train_ratio") == 0.8);
  CHECK(toml::get_bool(table, "corpus.concatenate_fields") == false);
  CHECK(toml::get_string_array(table, "corpus.label_names") ==
        std::vector<std::string>{"unreasonable", "reasonable"});
  // The dotted key appends to the active [corpus] table.
  CHECK(toml::get_double(table, "corpus.engine.threshold") == 0.5);
  CHECK_FALSE(toml::get_string(table, "run.missing").has_value());
}

TEST_CASE("toml: string escapes and literal strings") {
  const toml::Table table = toml::parse(
      "a = \"line\\nbreak \\\"quoted\\\" \\u00e9\"\n"
      "b = 'no \\n escapes here'\n");
  CHECK(toml::get_string(table, "a") == "line\nbreak \"quoted\" é");
  CHECK(toml::get_string(table, "b") == "no \\n escapes here");
  CHECK_THROWS_AS(toml::parse("x = \"bad \\q escape\""), ParseError);
  CHECK_THROWS_AS(toml::parse("x = \"unterminated"), ParseError);
}

TEST_CASE("toml: numbers parse as ints or floats") {
  const toml::Table table = toml::parse(
      "i = 42\n"
      "neg = -7\n"
      "big = 1_000_000\n"
      "f = 0.25\n"
      "e = 1e-4\n");
  CHECK(toml::get_int(table, "i") == 42);
  CHECK(toml::get_int(table, "neg") == -7);
  CHECK(toml::get_int(table, "big") == 1000000);
  CHECK(toml::get_double(table, "f") == 0.25);
  CHECK(toml::get_double(table, "e") == 1e-4);
  // get_double accepts an integer-typed value.
  CHECK(toml::get_double(table, "i") == 42.0);
  // get_int refuses a float-typed value.
  CHECK_THROWS_AS(toml::get_int(table, "f"), ConfigError);
  CHECK_THROWS_AS(toml::parse("x = 12abc"), ParseError);
}

TEST_CASE("toml: duplicate keys fail with their line number") {
  try {
    toml::parse("a = 1\na = 2\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
  }
}

TEST_CASE("toml: syntax errors carry line numbers") {
  try {
    toml::parse("good = 1\nbad bad bad\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("toml: serialize then parse is identity") {
  toml::Table table;
  table.emplace("run.seed", std::int64_t{42});
  table.emplace("run.out", std::string("runs/exp with spaces"));
  table.emplace("engine.threshold", 0.5);
  table.emplace("train.learning_rate", 0.1);
  table.emplace("train.whole", 2.0);  // must keep a ".0" to stay a float
  table.emplace("engine.on", true);
  table.emplace("engine.off", false);
  table.emplace("corpus.names", std::vector<toml::Scalar>{std::string("a"), std::string("b")});
  table.emplace("empty.list", std::vector<toml::Scalar>{});
  table.emplace("strings.tricky", std::string("tab\there \"and\" newline\nend"));

  const std::string text = toml::serialize(table);
  const toml::Table reparsed = toml::parse(text);
  CHECK(reparsed == table);
  // Serialization is canonical, so a second pass is byte-identical.
  CHECK(toml::serialize(reparsed) == text);
}

TEST_CASE("run config: defaults materialize and round-trip") {
  const RunConfig defaults = config_from_table({});
  CHECK_FALSE(defaults.seed_set);
  CHECK(defaults.threshold == 0.5);
  CHECK(defaults.max_iterations == 5);
  CHECK(defaults.strategy == Strategy::Msmi);
  CHECK(defaults.goal.empty());
  CHECK(defaults.task.empty());
  CHECK(defaults.scorer_kind == "builtin");
  CHECK(defaults.embedding_kind == "tfidf");

  const toml::Table table = config_to_table(defaults);
  const RunConfig again = config_from_table(table);
  CHECK(config_to_table(again) == table);
  CHECK(toml::serialize(config_to_table(again)) == toml::serialize(table));
}

TEST_CASE("run config: values flow from the table") {
  const std::string text = R"(
[run]
seed = 7
parallelism = 3

[corpus]
path = "corpus.jsonl"
schema = "short_text"
split = "val"

[tokenizer]
mode = "word"

[engine]
threshold = 0.65
strategy = "prompt"
goal = "untargeted"
task = "category_flip"

[generator]
kind = "mock"
script = ["one", "two"]
)";
  const RunConfig config = config_from_table(toml::parse(text));
  CHECK(config.seed == 7);
  CHECK(config.seed_set);
  CHECK(config.parallelism == 3);
  CHECK(config.schema == CorpusSchema::ShortText);
  CHECK(config.split == "val");
  CHECK(config.tokenizer.mode == TokenizerMode::Word);
  CHECK(config.threshold == 0.65);
  CHECK(config.strategy == Strategy::Prompt);
  CHECK(config.goal == "untargeted");
  CHECK(config.task == "category_flip");
  CHECK(config.generator.kind == GeneratorKind::Mock);
  CHECK(config.generator.mock_script == std::vector<std::string>{"one", "two"});
}

TEST_CASE("run config: unknown keys are rejected") {
  try {
    config_from_table(toml::parse("[run]\nseeed = 7\n"));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("run.seeed") != std::string::npos);
  }
  CHECK_THROWS_AS(config_from_table(toml::parse("run.seed = \"lots\"\n")), ConfigError);
  CHECK_THROWS_AS(config_from_table(toml::parse("engine.strategy = \"zigzag\"\n")),
                  ConfigError);
  CHECK_THROWS_AS(config_from_table(toml::parse("generator.kind = \"carrier-pigeon\"\n")),
                  ConfigError);
}

TEST_CASE("run config: file loading maps parse failures to config errors") {
  msmi_test::TempDir dir;
  const std::string path = dir.file("run.toml");
  msmi_test::write_text_file(path, "[run]\nseed = 5\n");
  CHECK(load_config_file(path).seed == 5);

  msmi_test::write_text_file(path, "not toml at all!\n");
  CHECK_THROWS_AS(load_config_file(path), ConfigError);
  CHECK_THROWS_AS(load_config_file(dir.file("missing.toml")), IoError);
}

TEST_CASE("sub_seed gives each purpose its own stream") {
  RunConfig config;
  config.seed = 42;
  CHECK(sub_seed(config, "split") != sub_seed(config, "train"));
  CHECK(sub_seed(config, "split") == sub_seed(config, "split"));
  RunConfig other = config;
  other.seed = 43;
  CHECK(sub_seed(config, "split") != sub_seed(other, "split"));
}

TEST_CASE("make_engine_config maps goal and task strings") {
  RunConfig config;
  config.goal = "targeted";
  config.target_class = 1;
  config.task = "legal_refinement";
  EngineConfig engine = make_engine_config(config);
  CHECK(engine.goal.kind == AttackGoal::Kind::Targeted);
  CHECK(engine.goal.target_class == 1);
  CHECK(engine.task.instruction == TaskDescriptor::legal_refinement().instruction);

  config.goal = "untargeted";
  config.task = "category_flip";
  engine = make_engine_config(config);
  CHECK(engine.goal.kind == AttackGoal::Kind::Untargeted);
  CHECK(engine.task.instruction == TaskDescriptor::category_flip().instruction);

  // Empty strings fall back to targeted legal refinement.
  config.goal.clear();
  config.task.clear();
  engine = make_engine_config(config);
  CHECK(engine.goal.kind == AttackGoal::Kind::Targeted);
  CHECK(engine.task.instruction == TaskDescriptor::legal_refinement().instruction);

  config.goal = "sideways";
  CHECK_THROWS_AS(make_engine_config(config), ConfigError);
  config.goal = "targeted";
  config.task = "origami";
  CHECK_THROWS_AS(make_engine_config(config), ConfigError);
}

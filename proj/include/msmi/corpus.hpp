#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "msmi/errors.hpp"

namespace msmi {

/// The six label values a dispute record can carry.
enum class RawLabel {
  Reasonable,
  Unreasonable,
  SomeReasonable,
  SomeUnreasonable,
  SomeNotApplicable,
  Other,
};

/// Collapsed label. Enum values double as class indices, so "reasonable"
/// is always class 1 in binary corpora.
enum class BinaryLabel {
  Unreasonable = 0,
  Reasonable = 1,
};

/// reasonable and some_reasonable collapse to reasonable; everything else,
/// including the catch-all other, collapses to unreasonable.
BinaryLabel remap_label(RawLabel raw);

std::string_view to_string(RawLabel label);
std::string_view to_string(BinaryLabel label);

/// Maps source-language label strings onto the canonical values.
using LabelAliasTable = std::map<std::string, std::string>;

/// Accepts the six canonical forms in snake_case or space-separated spelling,
/// plus any alias configured in `aliases`. Throws DataError otherwise.
RawLabel parse_raw_label(std::string_view text, const LabelAliasTable& aliases = {});

enum class CorpusSchema { Findr, ShortText };

std::string_view to_string(CorpusSchema schema);
CorpusSchema parse_schema(std::string_view name);

/// One dispute case or one benchmark example. For the short-text schema the
/// document lives in `claim` and `raw_label` is absent.
struct Record {
  std::string id;
  std::string claim;
  std::string rebuttal;
  std::string judgment;
  std::optional<RawLabel> raw_label;
  int label = 0;  // class index into Corpus::label_names

  friend bool operator==(const Record&, const Record&) = default;
};

struct Corpus {
  std::vector<Record> records;
  std::vector<std::string> label_names;
  CorpusSchema schema = CorpusSchema::Findr;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  int num_classes() const { return static_cast<int>(label_names.size()); }
};

struct LoadOptions {
  LabelAliasTable label_aliases;
  /// When false (default) records labeled `other` are dropped at load time;
  /// when true they are kept with binary label unreasonable.
  bool keep_other_records = false;
  /// Class names for the short-text schema when the file has no header line.
  std::vector<std::string> label_names;
};

struct LoadStats {
  std::size_t dropped_other = 0;
};

/// Parses one JSONL record. `line_no` is only used for error messages.
Record parse_record(const std::string& line, CorpusSchema schema,
                    const LoadOptions& options = {}, std::size_t line_no = 0);

/// Loads a UTF-8 JSONL corpus. Records keep file order; the first malformed
/// line or duplicate id aborts the load with its line number. A short-text
/// file may start with a {"label_names": [...]} header line.
Corpus load_corpus(const std::filesystem::path& path, CorpusSchema schema,
                   const LoadOptions& options = {}, LoadStats* stats = nullptr);

/// Writes the corpus back in its canonical JSONL form: fixed key order,
/// and a label_names header line for short-text corpora.
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

std::string record_to_json_line(const Record& record, CorpusSchema schema);

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct CorpusSplit {
  Corpus train;
  Corpus val;
  Corpus test;
};

/// Seeded shuffle followed by exact cuts: |train| = floor(r_train*N),
/// |val| = floor(r_val*N), test takes the remainder. Ratios must be
/// non-negative and sum to 1 within 1e-9.
CorpusSplit split_corpus(const Corpus& corpus, SplitRatios ratios, std::uint64_t seed);

/// Text fed to the discriminator for this record: the claim alone by
/// default, optionally concatenated with rebuttal and judgment.
std::string classification_text(const Record& record, bool concatenate_fields = false);

}  // namespace msmi

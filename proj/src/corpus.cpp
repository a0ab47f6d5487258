#include "msmi/corpus.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <unordered_set>

#include "msmi/random.hpp"

namespace msmi {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string trim_copy(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string normalize_label_key(std::string_view text) {
  std::string key;
  key.reserve(text.size());
  for (char c : text) {
    if (c == ' ' || c == '-') {
      key.push_back('_');
    } else {
      key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return key;
}

std::optional<RawLabel> canonical_raw_label(std::string_view key) {
  if (key == "reasonable") return RawLabel::Reasonable;
  if (key == "unreasonable") return RawLabel::Unreasonable;
  if (key == "some_reasonable") return RawLabel::SomeReasonable;
  if (key == "some_unreasonable") return RawLabel::SomeUnreasonable;
  if (key == "some_not_applicable") return RawLabel::SomeNotApplicable;
  if (key == "other") return RawLabel::Other;
  return std::nullopt;
}

std::string require_string(const ordered_json& obj, const char* key, std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ParseError(std::string("missing or non-string field \"") + key + "\"", line_no);
  }
  return it->get<std::string>();
}

}  // namespace

BinaryLabel remap_label(RawLabel raw) {
  switch (raw) {
    case RawLabel::Reasonable:
    case RawLabel::SomeReasonable:
      return BinaryLabel::Reasonable;
    default:
      return BinaryLabel::Unreasonable;
  }
}

std::string_view to_string(RawLabel label) {
  switch (label) {
    case RawLabel::Reasonable: return "reasonable";
    case RawLabel::Unreasonable: return "unreasonable";
    case RawLabel::SomeReasonable: return "some_reasonable";
    case RawLabel::SomeUnreasonable: return "some_unreasonable";
    case RawLabel::SomeNotApplicable: return "some_not_applicable";
    case RawLabel::Other: return "other";
  }
  return "?";
}

std::string_view to_string(BinaryLabel label) {
  return label == BinaryLabel::Reasonable ? "reasonable" : "unreasonable";
}

RawLabel parse_raw_label(std::string_view text, const LabelAliasTable& aliases) {
  auto alias = aliases.find(std::string(text));
  const std::string key =
      normalize_label_key(alias != aliases.end() ? alias->second : std::string(text));
  if (auto label = canonical_raw_label(key)) {
    return *label;
  }
  throw DataError("unknown raw label \"" + std::string(text) + "\"");
}

std::string_view to_string(CorpusSchema schema) {
  return schema == CorpusSchema::Findr ? "findr" : "short_text";
}

CorpusSchema parse_schema(std::string_view name) {
  if (name == "findr") return CorpusSchema::Findr;
  if (name == "short_text") return CorpusSchema::ShortText;
  throw ConfigError("unknown corpus schema \"" + std::string(name) + "\"");
}

Record parse_record(const std::string& line, CorpusSchema schema,
                    const LoadOptions& options, std::size_t line_no) {
  ordered_json obj;
  try {
    obj = ordered_json::parse(line);
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("invalid JSON: ") + ex.what(), line_no);
  }
  if (!obj.is_object()) {
    throw ParseError("record is not a JSON object", line_no);
  }

  Record record;
  record.id = require_string(obj, "id", line_no);
  if (record.id.empty()) {
    throw ParseError("empty id", line_no);
  }

  if (schema == CorpusSchema::Findr) {
    record.claim = require_string(obj, "claim", line_no);
    if (auto it = obj.find("rebuttal"); it != obj.end() && it->is_string()) {
      record.rebuttal = it->get<std::string>();
    }
    if (auto it = obj.find("judgment"); it != obj.end() && it->is_string()) {
      record.judgment = it->get<std::string>();
    }
    const std::string raw = require_string(obj, "raw_label", line_no);
    try {
      record.raw_label = parse_raw_label(raw, options.label_aliases);
    } catch (const DataError& ex) {
      throw DataError(line_no > 0 ? "line " + std::to_string(line_no) + ": " + ex.what()
                                  : std::string(ex.what()));
    }
    record.label = static_cast<int>(remap_label(*record.raw_label));
  } else {
    record.claim = require_string(obj, "text", line_no);
    auto it = obj.find("label");
    if (it == obj.end() || !it->is_number_integer()) {
      throw ParseError("missing or non-integer field \"label\"", line_no);
    }
    record.label = it->get<int>();
    if (record.label < 0) {
      throw ParseError("negative class index", line_no);
    }
  }

  if (trim_copy(record.claim).empty()) {
    throw ParseError("empty claim", line_no);
  }
  return record;
}

Corpus load_corpus(const std::filesystem::path& path, CorpusSchema schema,
                   const LoadOptions& options, LoadStats* stats) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open corpus file " + path.string());
  }

  Corpus corpus;
  corpus.schema = schema;
  if (schema == CorpusSchema::Findr) {
    corpus.label_names = {"unreasonable", "reasonable"};
  } else {
    corpus.label_names = options.label_names;
  }

  LoadStats local_stats;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  bool first_content_line = true;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim_copy(line).empty()) {
      continue;
    }

    // A short-text file may lead with {"label_names": [...]}.
    if (first_content_line && schema == CorpusSchema::ShortText) {
      first_content_line = false;
      ordered_json header;
      try {
        header = ordered_json::parse(line);
      } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("invalid JSON: ") + ex.what(), line_no);
      }
      if (header.is_object() && header.contains("label_names") && !header.contains("id")) {
        if (!header["label_names"].is_array()) {
          throw ParseError("label_names header must be an array", line_no);
        }
        corpus.label_names.clear();
        for (const auto& name : header["label_names"]) {
          if (!name.is_string()) {
            throw ParseError("label_names entries must be strings", line_no);
          }
          corpus.label_names.push_back(name.get<std::string>());
        }
        continue;
      }
    }
    first_content_line = false;

    Record record = parse_record(line, schema, options, line_no);

    if (schema == CorpusSchema::Findr && record.raw_label == RawLabel::Other &&
        !options.keep_other_records) {
      ++local_stats.dropped_other;
      continue;
    }
    if (!seen_ids.insert(record.id).second) {
      throw DataError("line " + std::to_string(line_no) + ": duplicate record id \"" +
                      record.id + "\"");
    }
    corpus.records.push_back(std::move(record));
  }

  if (schema == CorpusSchema::ShortText) {
    if (corpus.label_names.empty()) {
      throw DataError("short_text corpus requires label_names (header line or config): " +
                      path.string());
    }
    for (const Record& record : corpus.records) {
      if (record.label >= corpus.num_classes()) {
        throw DataError("record \"" + record.id + "\" has class index " +
                        std::to_string(record.label) + " but only " +
                        std::to_string(corpus.num_classes()) + " label names are known");
      }
    }
  }

  if (stats != nullptr) {
    *stats = local_stats;
  }
  return corpus;
}

std::string record_to_json_line(const Record& record, CorpusSchema schema) {
  ordered_json obj;
  obj["id"] = record.id;
  if (schema == CorpusSchema::Findr) {
    obj["claim"] = record.claim;
    obj["rebuttal"] = record.rebuttal;
    obj["judgment"] = record.judgment;
    obj["raw_label"] = record.raw_label ? std::string(to_string(*record.raw_label)) : "";
  } else {
    obj["text"] = record.claim;
    obj["label"] = record.label;
  }
  return obj.dump();
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("cannot write corpus file " + path.string());
  }
  if (corpus.schema == CorpusSchema::ShortText) {
    ordered_json header;
    header["label_names"] = corpus.label_names;
    out << header.dump() << '\n';
  }
  for (const Record& record : corpus.records) {
    out << record_to_json_line(record, corpus.schema) << '\n';
  }
  if (!out) {
    throw IoError("failed while writing corpus file " + path.string());
  }
}

CorpusSplit split_corpus(const Corpus& corpus, SplitRatios ratios, std::uint64_t seed) {
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0) {
    throw ConfigError("split ratios must be non-negative");
  }
  const double sum = ratios.train + ratios.val + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1 (got " + std::to_string(sum) + ")");
  }

  const std::size_t n = corpus.size();
  std::mt19937_64 rng(seed);
  const std::vector<std::size_t> perm = random_permutation(n, rng);

  const std::size_t n_train = static_cast<std::size_t>(std::floor(ratios.train * static_cast<double>(n)));
  const std::size_t n_val = static_cast<std::size_t>(std::floor(ratios.val * static_cast<double>(n)));

  CorpusSplit split;
  for (Corpus* part : {&split.train, &split.val, &split.test}) {
    part->label_names = corpus.label_names;
    part->schema = corpus.schema;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Record& record = corpus.records[perm[i]];
    if (i < n_train) {
      split.train.records.push_back(record);
    } else if (i < n_train + n_val) {
      split.val.records.push_back(record);
    } else {
      split.test.records.push_back(record);
    }
  }
  return split;
}

std::string classification_text(const Record& record, bool concatenate_fields) {
  if (!concatenate_fields) {
    return record.claim;
  }
  std::string text = record.claim;
  if (!record.rebuttal.empty()) {
    text += '\n';
    text += record.rebuttal;
  }
  if (!record.judgment.empty()) {
    text += '\n';
    text += record.judgment;
  }
  return text;
}

}  // namespace msmi

#include "msmi/vectorizer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include "msmi/errors.hpp"

namespace msmi {

Vectorizer fit_vectorizer(const std::vector<std::string>& docs, const TokenizerConfig& config,
                          int vocab_size_max, int min_doc_freq) {
  if (docs.empty()) {
    throw DataError("fit_vectorizer: empty document list");
  }
  if (vocab_size_max < 1) {
    throw ConfigError("vocab_size_max must be >= 1");
  }

  std::unordered_map<std::string, int> doc_freq;
  std::unordered_set<std::string> seen;
  for (const std::string& doc : docs) {
    seen.clear();
    for (std::string& feature : tokenize(doc, config)) {
      if (seen.insert(feature).second) {
        ++doc_freq[feature];
      }
    }
  }

  struct Entry {
    const std::string* feature;
    int df;
  };
  std::vector<Entry> entries;
  entries.reserve(doc_freq.size());
  for (const auto& [feature, df] : doc_freq) {
    if (df >= min_doc_freq) {
      entries.push_back({&feature, df});
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.df != b.df) return a.df > b.df;
    return *a.feature < *b.feature;
  });
  if (entries.size() > static_cast<std::size_t>(vocab_size_max)) {
    entries.resize(static_cast<std::size_t>(vocab_size_max));
  }

  // Column indices in lexicographic feature order, independent of df ranking.
  std::vector<const std::string*> selected;
  selected.reserve(entries.size());
  for (const Entry& e : entries) {
    selected.push_back(e.feature);
  }
  std::sort(selected.begin(), selected.end(),
            [](const std::string* a, const std::string* b) { return *a < *b; });

  Vectorizer vectorizer;
  vectorizer.config = config;
  vectorizer.idf.resize(static_cast<Eigen::Index>(selected.size()));
  const double n_docs = static_cast<double>(docs.size());
  for (std::size_t col = 0; col < selected.size(); ++col) {
    const std::string& feature = *selected[col];
    vectorizer.vocabulary.emplace(feature, static_cast<int>(col));
    const double df = static_cast<double>(doc_freq.at(feature));
    vectorizer.idf(static_cast<Eigen::Index>(col)) = std::log((1.0 + n_docs) / (1.0 + df)) + 1.0;
  }
  return vectorizer;
}

SparseVec vectorize(const Vectorizer& vectorizer, std::string_view text) {
  std::map<int, double> counts;  // ordered so sparse insertion is sequential
  for (const std::string& feature : tokenize(text, vectorizer.config)) {
    auto it = vectorizer.vocabulary.find(feature);
    if (it != vectorizer.vocabulary.end()) {
      counts[it->second] += 1.0;
    }
  }

  SparseVec vec(vectorizer.dimension());
  if (counts.empty()) {
    return vec;
  }
  vec.reserve(static_cast<Eigen::Index>(counts.size()));
  double sq_norm = 0.0;
  for (const auto& [col, count] : counts) {
    const double weight = count * vectorizer.idf(col);
    vec.insertBack(col) = weight;
    sq_norm += weight * weight;
  }
  vec /= std::sqrt(sq_norm);
  return vec;
}

}  // namespace msmi

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "msmi/tokenizer.hpp"

namespace msmi {

using SparseVec = Eigen::SparseVector<double>;

/// TF-IDF featurizer. Vocabulary columns form a bijection onto 0..V-1,
/// assigned in lexicographic feature order so the mapping is independent of
/// corpus ordering.
struct Vectorizer {
  std::unordered_map<std::string, int> vocabulary;
  Eigen::VectorXd idf;
  TokenizerConfig config;

  int dimension() const { return static_cast<int>(idf.size()); }
};

/// Keeps features with document frequency >= min_doc_freq, truncated to the
/// vocab_size_max most document-frequent (ties favor lexicographically
/// smaller features). idf(f) = ln((1+N)/(1+df(f))) + 1.
Vectorizer fit_vectorizer(const std::vector<std::string>& docs, const TokenizerConfig& config,
                          int vocab_size_max, int min_doc_freq);

/// term_count * idf per column, L2-normalized; a document with no
/// in-vocabulary feature maps to the zero vector.
SparseVec vectorize(const Vectorizer& vectorizer, std::string_view text);

}  // namespace msmi

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "msmi/corpus.hpp"
#include "msmi/vectorizer.hpp"

namespace msmi {

/// Per-class probability distribution for one scored text.
struct Verdict {
  Eigen::VectorXd probabilities;
  int predicted = -1;  // argmax; ties resolve to the lowest class index
};

/// Validates the distribution (non-negative, sums to 1 within 1e-9) and
/// fills in the argmax. Throws ProtocolError on violation.
Verdict make_verdict(Eigen::VectorXd probabilities);

/// The scoring interface every discriminating model implements: the built-in
/// linear model, the remote-classifier client, and test oracles.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual Verdict score(std::string_view text) const = 0;
};

struct TrainConfig {
  int epochs = 10;
  double learning_rate_0 = 0.1;
  double l2_lambda = 1e-4;
  std::uint64_t seed = 0;
  int vocab_size_max = 50000;
  int min_doc_freq = 2;
};

/// TF-IDF + multinomial logistic regression. Immutable once constructed;
/// scoring is a pure function and safe to call concurrently.
class DiscriminatorModel final : public Scorer {
 public:
  DiscriminatorModel(Vectorizer vectorizer, Eigen::MatrixXd weights, Eigen::VectorXd bias,
                     std::vector<std::string> label_names);

  /// softmax(W . vectorize(text) + b), with max-subtraction.
  Verdict score(std::string_view text) const override;

  int num_classes() const { return static_cast<int>(bias_.size()); }
  const Vectorizer& vectorizer() const { return vectorizer_; }
  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::VectorXd& bias() const { return bias_; }
  const std::vector<std::string>& label_names() const { return label_names_; }

 private:
  Vectorizer vectorizer_;
  Eigen::MatrixXd weights_;  // K x V
  Eigen::VectorXd bias_;     // K
  std::vector<std::string> label_names_;
};

struct TrainReport {
  int best_epoch = 0;  // 1-based
  double best_val_accuracy = 0.0;
  std::vector<double> val_accuracy_by_epoch;
};

/// Fits the vectorizer on the training documents, then runs seeded SGD on
/// cross-entropy + (lambda/2)|W|^2 with step eta_t = eta0 / (1 + lambda*eta0*t).
/// Returns the epoch snapshot with the highest validation accuracy (ties go
/// to the earliest epoch). An empty validation corpus selects the final epoch.
DiscriminatorModel train_classifier(const Corpus& train, const Corpus& val,
                                    const TrainConfig& train_config,
                                    const TokenizerConfig& tokenizer_config,
                                    TrainReport* report = nullptr,
                                    bool concatenate_fields = false);

/// Fraction of records whose predicted class equals the true class.
double evaluate_accuracy(const Scorer& scorer, const Corpus& corpus,
                         bool concatenate_fields = false);

/// Batch objective used by the trainer's gradient: mean cross-entropy over
/// the examples plus (lambda/2)|W|^2. Exposed so the analytic gradient can
/// be checked against finite differences.
struct LossGrad {
  double loss = 0.0;
  Eigen::MatrixXd grad_weights;
  Eigen::VectorXd grad_bias;
};
LossGrad regularized_cross_entropy(const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias,
                                   const std::vector<SparseVec>& inputs,
                                   const std::vector<int>& labels, double l2_lambda);

/// Single-file model container: magic, format version, canonical payload,
/// trailing CRC32. load(save(m)) scores bit-identically to m.
void save_model(const DiscriminatorModel& model, const std::filesystem::path& path);
DiscriminatorModel load_model(const std::filesystem::path& path);

}  // namespace msmi

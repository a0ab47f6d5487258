#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "msmi/discriminator.hpp"
#include "msmi/engine.hpp"

namespace msmi {

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual Eigen::VectorXd embed(std::string_view text) const = 0;
  virtual std::string name() const = 0;
};

/// Embeds into the discriminator's own TF-IDF space. Self-contained and
/// deterministic; the model must outlive the provider.
class TfidfEmbedding final : public EmbeddingProvider {
 public:
  explicit TfidfEmbedding(const DiscriminatorModel& model) : model_(&model) {}

  Eigen::VectorXd embed(std::string_view text) const override;
  std::string name() const override { return "tfidf"; }

 private:
  const DiscriminatorModel* model_;
};

struct RemoteEmbeddingConfig {
  std::string base_url;
  std::string path = "/embed";
  int dimension = 0;  // > 0; responses of any other length are rejected
  std::chrono::seconds timeout{30};
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{1000};
  std::uint64_t jitter_seed = 0;
};

class RemoteEmbedding final : public EmbeddingProvider {
 public:
  explicit RemoteEmbedding(RemoteEmbeddingConfig config);

  Eigen::VectorXd embed(std::string_view text) const override;
  std::string name() const override;

 private:
  RemoteEmbeddingConfig config_;
};

/// 100 x successes / attempts.
double success_rate(const std::vector<RefinementResult>& results);

/// 100 x (outputs still classified as their true label) / attempts.
/// Lower is better: every surviving correct prediction is a failed attack.
double adversarial_accuracy(const Scorer& m, const std::vector<RefinementResult>& results);

struct ReportRow {
  std::string doc_id;
  int iterations_used = 0;
  double final_goal_score = 0.0;
  double cosine = 0.0;
  bool success = false;
};

struct Report {
  std::string strategy;
  std::string generator_name;
  std::string embedding_name;
  int n_attempted = 0;
  int n_succeeded = 0;
  double success_rate = 0.0;                     // percent
  double mean_cosine = 0.0;                      // over all attempts; the headline aggregate
  std::optional<double> mean_cosine_successful;  // over successes only
  std::optional<double> adversarial_accuracy;    // percent; absent without a scorer
  std::vector<ReportRow> rows;
};

/// Rows stay in result order; cosine pairs (original_text, output_text); the
/// adversarial accuracy column is filled only when a scorer is supplied.
Report build_report(const std::vector<RefinementResult>& results,
                    const EmbeddingProvider& provider, const Scorer* m,
                    const std::string& strategy_name, const std::string& generator_name);

std::string render_report_text(const Report& report);

/// Machine-readable rendering (schema "report_v1"), byte-deterministic for
/// equal reports. Ends with a newline.
std::string report_to_json(const Report& report);

}  // namespace msmi

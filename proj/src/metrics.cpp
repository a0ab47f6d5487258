#include "msmi/metrics.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <sstream>

#include "http_util.hpp"
#include "msmi/math.hpp"
#include "msmi/vectorizer.hpp"

namespace msmi {
namespace {

std::string format_fixed(double value, int decimals) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", decimals, value);
  return buffer;
}

}  // namespace

Eigen::VectorXd TfidfEmbedding::embed(std::string_view text) const {
  const SparseVec sparse = vectorize(model_->vectorizer(), text);
  Eigen::VectorXd dense = Eigen::VectorXd::Zero(sparse.size());
  for (SparseVec::InnerIterator it(sparse); it; ++it) {
    dense(it.index()) = it.value();
  }
  return dense;
}

RemoteEmbedding::RemoteEmbedding(RemoteEmbeddingConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) {
    throw ConfigError("remote embedding needs a base_url");
  }
  if (config_.dimension <= 0) {
    throw ConfigError("remote embedding needs a positive dimension");
  }
}

std::string RemoteEmbedding::name() const { return "remote(" + config_.base_url + ")"; }

Eigen::VectorXd RemoteEmbedding::embed(std::string_view text) const {
  const std::string identity = config_.base_url + config_.path;
  const std::string body = nlohmann::json{{"text", std::string(text)}}.dump();

  detail::RetryPolicy policy;
  policy.max_retries = config_.max_retries;
  policy.backoff_base = config_.backoff_base;
  policy.jitter_seed = config_.jitter_seed;

  return detail::with_retries(policy, [&] {
    const detail::HttpResponse response =
        detail::post_json(config_.base_url, config_.path, body, {}, config_.timeout);
    if (response.status != 200) {
      const std::string message =
          "embedding " + identity + " returned status " + std::to_string(response.status);
      if (detail::retryable_status(response.status)) {
        throw TransportError(message, /*retryable=*/true);
      }
      throw ProtocolError(message);
    }
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(response.body);
    } catch (const nlohmann::json::exception& error) {
      throw ProtocolError("embedding " + identity + " returned invalid JSON: " + error.what());
    }
    if (!doc.is_object() || !doc.contains("embedding") || !doc["embedding"].is_array()) {
      throw ProtocolError("embedding " + identity + " response lacks an embedding array");
    }
    const auto& values = doc["embedding"];
    if (static_cast<int>(values.size()) != config_.dimension) {
      throw ProtocolError("embedding " + identity + " returned dimension " +
                          std::to_string(values.size()) + ", expected " +
                          std::to_string(config_.dimension));
    }
    Eigen::VectorXd out(config_.dimension);
    for (int i = 0; i < config_.dimension; ++i) {
      if (!values[i].is_number()) {
        throw ProtocolError("embedding " + identity + " element " + std::to_string(i) +
                            " is not a number");
      }
      out(i) = values[i].get<double>();
    }
    return out;
  });
}

double success_rate(const std::vector<RefinementResult>& results) {
  if (results.empty()) {
    throw DataError("success_rate over an empty result set");
  }
  std::size_t succeeded = 0;
  for (const RefinementResult& result : results) {
    if (result.success) ++succeeded;
  }
  return 100.0 * static_cast<double>(succeeded) / static_cast<double>(results.size());
}

double adversarial_accuracy(const Scorer& m, const std::vector<RefinementResult>& results) {
  if (results.empty()) {
    throw DataError("adversarial_accuracy over an empty result set");
  }
  std::size_t still_correct = 0;
  for (const RefinementResult& result : results) {
    if (!result.trace.true_label.has_value()) {
      throw DataError("document \"" + result.trace.doc_id +
                      "\" lacks a true label; adversarial accuracy is undefined");
    }
    if (m.score(result.output_text).predicted == *result.trace.true_label) {
      ++still_correct;
    }
  }
  return 100.0 * static_cast<double>(still_correct) / static_cast<double>(results.size());
}

Report build_report(const std::vector<RefinementResult>& results,
                    const EmbeddingProvider& provider, const Scorer* m,
                    const std::string& strategy_name, const std::string& generator_name) {
  if (results.empty()) {
    throw DataError("build_report over an empty result set");
  }

  Report report;
  report.strategy = strategy_name;
  report.generator_name = generator_name;
  report.embedding_name = provider.name();
  report.n_attempted = static_cast<int>(results.size());

  double cosine_sum = 0.0;
  double cosine_sum_successful = 0.0;
  for (const RefinementResult& result : results) {
    const double cosine = cosine_similarity(provider.embed(result.trace.original_text),
                                            provider.embed(result.output_text));
    ReportRow row;
    row.doc_id = result.trace.doc_id;
    row.iterations_used = static_cast<int>(result.trace.iterations.size());
    row.final_goal_score = result.output_goal_score;
    row.cosine = cosine;
    row.success = result.success;
    report.rows.push_back(std::move(row));

    cosine_sum += cosine;
    if (result.success) {
      ++report.n_succeeded;
      cosine_sum_successful += cosine;
    }
  }

  report.success_rate = success_rate(results);
  report.mean_cosine = cosine_sum / static_cast<double>(report.n_attempted);
  if (report.n_succeeded > 0) {
    report.mean_cosine_successful = cosine_sum_successful / static_cast<double>(report.n_succeeded);
  }
  if (m != nullptr) {
    report.adversarial_accuracy = adversarial_accuracy(*m, results);
  }
  return report;
}

std::string render_report_text(const Report& report) {
  std::ostringstream out;
  out << "strategy: " << report.strategy << "\n";
  out << "generator: " << report.generator_name << "\n";
  out << "embedding: " << report.embedding_name << "\n";
  out << "attempted: " << report.n_attempted << "  succeeded: " << report.n_succeeded << "\n";
  out << "\n";
  out << "Success Rate (↑):          " << format_fixed(report.success_rate, 2) << "%\n";
  out << "Mean Cosine Sim. (↑):      " << format_fixed(report.mean_cosine, 3) << "\n";
  if (report.mean_cosine_successful.has_value()) {
    out << "Mean Cosine, successes (↑): " << format_fixed(*report.mean_cosine_successful, 3)
        << "\n";
  }
  if (report.adversarial_accuracy.has_value()) {
    out << "Adversarial Accuracy (↓):  " << format_fixed(*report.adversarial_accuracy, 1)
        << "%\n";
  }
  out << "\n";
  out << "doc_id\titerations\tgoal_score\tcosine\tsuccess\n";
  for (const ReportRow& row : report.rows) {
    out << row.doc_id << "\t" << row.iterations_used << "\t"
        << format_fixed(row.final_goal_score, 4) << "\t" << format_fixed(row.cosine, 3) << "\t"
        << (row.success ? "yes" : "no") << "\n";
  }
  return out.str();
}

std::string report_to_json(const Report& report) {
  nlohmann::ordered_json doc;
  doc["schema"] = "report_v1";
  doc["strategy"] = report.strategy;
  doc["generator"] = report.generator_name;
  doc["embedding"] = report.embedding_name;
  doc["n_attempted"] = report.n_attempted;
  doc["n_succeeded"] = report.n_succeeded;
  doc["success_rate"] = report.success_rate;
  doc["mean_cosine"] = report.mean_cosine;
  if (report.mean_cosine_successful.has_value()) {
    doc["mean_cosine_successful"] = *report.mean_cosine_successful;
  } else {
    doc["mean_cosine_successful"] = nullptr;
  }
  if (report.adversarial_accuracy.has_value()) {
    doc["adversarial_accuracy"] = *report.adversarial_accuracy;
  } else {
    doc["adversarial_accuracy"] = nullptr;
  }
  doc["rows"] = nlohmann::ordered_json::array();
  for (const ReportRow& row : report.rows) {
    nlohmann::ordered_json r;
    r["doc_id"] = row.doc_id;
    r["iterations_used"] = row.iterations_used;
    r["final_goal_score"] = row.final_goal_score;
    r["cosine"] = row.cosine;
    r["success"] = row.success;
    doc["rows"].push_back(std::move(r));
  }
  return doc.dump(2) + "\n";
}

}  // namespace msmi

#include "msmi/remote_scorer.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

#include "http_util.hpp"

namespace msmi {
namespace {

Verdict parse_classifier_response(const std::string& body, const std::string& endpoint) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& error) {
    throw ProtocolError("classifier " + endpoint + " returned invalid JSON: " + error.what());
  }
  if (!doc.is_object() || !doc.contains("probabilities") || !doc["probabilities"].is_array()) {
    throw ProtocolError("classifier " + endpoint + " response lacks a probabilities array");
  }

  const auto& probs = doc["probabilities"];
  Eigen::VectorXd probabilities(probs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!probs[i].is_number()) {
      throw ProtocolError("classifier " + endpoint + " probability " + std::to_string(i) +
                          " is not a number");
    }
    probabilities(static_cast<Eigen::Index>(i)) = probs[i].get<double>();
    sum += probabilities(static_cast<Eigen::Index>(i));
  }
  if (std::abs(sum - 1.0) > 0.05 || sum <= 0.0) {
    throw ProtocolError("classifier " + endpoint + " probabilities sum to " +
                        std::to_string(sum) + ", outside the renormalization tolerance");
  }
  probabilities /= sum;
  return make_verdict(std::move(probabilities));
}

}  // namespace

Verdict remote_score(const RemoteClassifierConfig& endpoint, std::string_view text) {
  const std::string identity = endpoint.base_url + endpoint.path;
  const std::string body = nlohmann::json{{"text", std::string(text)}}.dump();

  detail::RetryPolicy policy;
  policy.max_retries = endpoint.max_retries;
  policy.backoff_base = endpoint.backoff_base;
  policy.jitter_seed = endpoint.jitter_seed;

  return detail::with_retries(policy, [&] {
    const detail::HttpResponse response =
        detail::post_json(endpoint.base_url, endpoint.path, body, {}, endpoint.timeout);
    if (response.status != 200) {
      const std::string message =
          "classifier " + identity + " returned status " + std::to_string(response.status);
      if (detail::retryable_status(response.status)) {
        throw TransportError(message, /*retryable=*/true);
      }
      throw ProtocolError(message);
    }
    return parse_classifier_response(response.body, identity);
  });
}

struct RemoteScorer::Impl {
  explicit Impl(int max_in_flight) : cap(max_in_flight) {}
  mutable detail::InFlightCap cap;
};

RemoteScorer::RemoteScorer(RemoteClassifierConfig config)
    : config_(std::move(config)), impl_(std::make_unique<Impl>(config_.max_in_flight)) {
  if (config_.base_url.empty()) {
    throw ConfigError("remote classifier needs a base_url");
  }
}

RemoteScorer::~RemoteScorer() = default;

Verdict RemoteScorer::score(std::string_view text) const {
  auto slot = impl_->cap.enter();
  return remote_score(config_, text);
}

}  // namespace msmi

#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "msmi/discriminator.hpp"

namespace msmi {

struct RemoteClassifierConfig {
  std::string base_url;          // scheme://host[:port]
  std::string path = "/classify";
  std::chrono::seconds timeout{30};
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{1000};
  int max_in_flight = 8;
  std::uint64_t jitter_seed = 0;
};

/// One scoring round trip: POST {"text": ...}, expect {"probabilities": [...],
/// "labels": [...]}. Probability sums within 0.05 of 1 are renormalized;
/// anything further off is a protocol error. Connection failures and 429/5xx
/// statuses are retried per the config's backoff policy.
Verdict remote_score(const RemoteClassifierConfig& endpoint, std::string_view text);

/// Scorer adapter over remote_score with a shared in-flight request cap.
class RemoteScorer final : public Scorer {
 public:
  explicit RemoteScorer(RemoteClassifierConfig config);
  ~RemoteScorer() override;

  Verdict score(std::string_view text) const override;

  const RemoteClassifierConfig& config() const { return config_; }

 private:
  RemoteClassifierConfig config_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace msmi

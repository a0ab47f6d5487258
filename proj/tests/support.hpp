#pragma once

// Shared fixtures for the test binaries: a temp-dir guard, an in-process HTTP
// server, a closed-form scorer, and synthetic corpus builders.

// Eigen must be tokenized before httplib: httplib drags in <resolv.h>, whose
// `_res` macro would otherwise mangle Eigen's parameter names.
#include "msmi/corpus.hpp"
#include "msmi/discriminator.hpp"
#include "msmi/math.hpp"
#include "msmi/random.hpp"

#include <httplib.h>
#ifdef _res
#undef _res
#endif

#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace msmi_test {

/// Creates a unique directory under the system temp root and removes it (and
/// everything inside) on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    std::ostringstream name;
    name << "msmi-test-" << ::getpid() << "-" << stamp << "-" << counter++;
    path_ = std::filesystem::temp_directory_path() / name.str();
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

/// In-process HTTP server bound to an ephemeral loopback port. Register
/// handlers on server() before calling start().
class TestServer {
 public:
  TestServer() = default;
  ~TestServer() { stop(); }
  TestServer(const TestServer&) = delete;
  TestServer& operator=(const TestServer&) = delete;

  httplib::Server& server() { return server_; }

  void start() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  int port() const { return port_; }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

/// Closed-form binary scorer: p(class 1) = logistic(2 * count(keyword) - 3),
/// where count is the number of (non-overlapping) substring occurrences.
class KeywordLogisticOracle final : public msmi::Scorer {
 public:
  explicit KeywordLogisticOracle(std::string keyword) : keyword_(std::move(keyword)) {}

  msmi::Verdict score(std::string_view text) const override {
    int count = 0;
    std::size_t pos = 0;
    while ((pos = text.find(keyword_, pos)) != std::string_view::npos) {
      ++count;
      pos += keyword_.size();
    }
    const double p1 = msmi::logistic(2.0 * count - 3.0);
    return msmi::make_verdict(Eigen::Vector2d(1.0 - p1, p1));
  }

 private:
  std::string keyword_;
};

/// Word pools with disjoint vocabulary per class; a linear model separates
/// the two classes perfectly.
inline const std::vector<std::string>& class0_words() {
  static const std::vector<std::string> words = {
      "refund",  "denied",   "broken",  "faulty", "overcharged",
      "ignored", "damaged",  "late",    "unfair", "misled",
  };
  return words;
}

inline const std::vector<std::string>& class1_words() {
  static const std::vector<std::string> words = {
      "agreed",   "resolved", "delivered", "documented", "reasonable",
      "courteous", "refunded", "promptly",  "acknowledged", "valid",
  };
  return words;
}

inline std::string synthetic_claim(std::mt19937_64& rng, int label, std::size_t n_words) {
  const auto& pool = label == 0 ? class0_words() : class1_words();
  std::string claim;
  for (std::size_t i = 0; i < n_words; ++i) {
    if (!claim.empty()) claim += ' ';
    claim += pool[msmi::bounded_uniform(rng, pool.size())];
  }
  return claim;
}

/// Balanced two-class corpus with disjoint per-class vocabulary.
inline msmi::Corpus synthetic_corpus(std::size_t n_docs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  msmi::Corpus corpus;
  corpus.label_names = {"unreasonable", "reasonable"};
  for (std::size_t i = 0; i < n_docs; ++i) {
    msmi::Record rec;
    const int label = static_cast<int>(i % 2);
    rec.id = "doc-" + std::to_string(i);
    rec.claim = synthetic_claim(rng, label, 8 + msmi::bounded_uniform(rng, 8));
    rec.label = label;
    rec.raw_label = label == 0 ? msmi::RawLabel::Unreasonable : msmi::RawLabel::Reasonable;
    corpus.records.push_back(std::move(rec));
  }
  return corpus;
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  out << body;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace msmi_test
